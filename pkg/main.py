"""
Main entry point for the PACE pipeline.
"""
from pace.cli import run

if __name__ == "__main__":
    run()
