"""Figure rendering over narrativeflow's published artifact files.

This package never imports the pipeline; it consumes only the documented
CSV/TSV/JSONL artifacts, so it can run anywhere the files can be copied.
"""

__version__ = "0.1.0"
