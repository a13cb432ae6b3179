''' Convert PPM images into image tensors '''

from textspot.tensor import ppm_to_tensor, write_ptm

from .helper import handles_errors


def set_up_ppm2ptm(subparsers):
    ''' Set up arguments for the `ppm2ptm` command '''

    parser = subparsers.add_parser('ppm2ptm',
        help="Convert a binary (P6) PPM image into a [3,H,W] PTM tensor")

    parser.add_argument('infile', type=str)
    parser.add_argument('outfile', type=str)

    parser.set_defaults(func=_ppm2ptm_command)


@handles_errors
def _ppm2ptm_command(args):
    with open(args.infile, 'rb') as ppm_file:
        payload = ppm_file.read()

    tensor = ppm_to_tensor(payload)
    write_ptm(args.outfile, tensor)
    print(f'Wrote {list(tensor.dims)} tensor to "{args.outfile}"')
