"""Pattern-based summaries of why and why-not provenance.

The heavy lifting lives in the compiled extension; this package re-exports
its entry points.
"""

from provsumm._core import pipeline_sql, render_text, run

__all__ = ["run", "render_text", "pipeline_sql"]
__version__ = "0.1.0"
