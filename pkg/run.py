import sys

from gktwist.scripts.cli import main

if __name__ == "__main__":
    # python run.py theorem --config configs/flat.json
    sys.exit(main(sys.argv[1:] or ["all", "--config", "configs/flat.json"]))
