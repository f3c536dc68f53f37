"""Allow running as python -m wavereg."""

from wavereg.cli import main

if __name__ == "__main__":
    main()
