#!/usr/bin/env python3
"""CLI 入口，转发到 wpaa.cli。"""

from wpaa.cli import cli


if __name__ == "__main__":
    cli()
