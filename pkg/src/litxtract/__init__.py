"""litxtract: schema-guided batch information extraction for literature exports.

Parses CSV/XLSX exports from academic databases, maps heterogeneous column
headers to semantic fields, generates structured-output prompts from
user-defined extraction schemas, runs concurrent extraction against any
OpenAI-compatible LLM endpoint with retry/pause/checkpoint support, salvages
JSON from noisy model output, and exports merged results.
"""

__version__ = "0.1.0"
