''' This is part of the benchmark scripts. See __init__.py for more details. '''

from typing import Optional, Sequence

from pandas import read_csv
from seaborn import barplot, set_theme  # type: ignore
from matplotlib import pyplot

from ..pipeline import STAGES


def plot_stage_bars(infile: str, outfile: str, x_axis: Optional[str] = None,
                    stages: Sequence[str] = STAGES, title: str = "Time cost per stage",
                    font_size: int = 12, plot_scale: float = 1.0, style: str = "whitegrid"):
    ''' Mean milliseconds of every stage as grouped bars, one group per run '''

    print("📈 Generating bar plot")

    data = read_csv(infile, comment='#', header=0, skipinitialspace=True)
    if len(data.index) == 0:
        print("No data yet. Will not create plot")
        return

    if x_axis is None:
        x_axis = "uid"

    columns = [f"{stage}_mean_ms" for stage in stages]
    long = data.melt(id_vars=[x_axis], value_vars=columns, var_name="stage",
                     value_name="ms")
    long["stage"] = long["stage"].str.replace("_mean_ms", "", regex=False)

    set_theme(style=style)

    pyplot.figure(figsize=(4 * plot_scale, 3 * plot_scale))
    axis = pyplot.gca()
    barplot(x=x_axis, y="ms", hue="stage", data=long, ax=axis)
    axis.set_ylim(bottom=0)
    axis.set_xlabel(x_axis, fontsize=font_size)
    axis.set_ylabel("mean ms", fontsize=font_size)
    axis.legend(fontsize=font_size, loc="best")
    pyplot.title(title)
    pyplot.tight_layout()

    pyplot.savefig(outfile)
    pyplot.close()
    print(f'Plot written to "{outfile}"')
