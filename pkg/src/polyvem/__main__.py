import os
import sys

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def main(argv=None) -> int:
    threads = os.environ.get("POLYVEM_THREADS")
    if threads:
        for var in _THREAD_VARS:
            os.environ[var] = threads
    from .cli import main as cli_main

    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
