"""Entry point script for the Elastic-Net provisioning simulator."""

import sys

from src.app import main

if __name__ == "__main__":
    sys.exit(main())
