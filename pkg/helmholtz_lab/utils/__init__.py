from .artifacts import RunManifest, config_hash, tool_version, write_csv, write_dat
from .document import Document, DocumentEntry, read_document, reject_unknown_keys
from .parallel_utils import parallel_map
