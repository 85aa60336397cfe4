from .work_types import EXTERIOR_WORK_TYPES, N_WORK_TYPES, WORK_TYPE_COLUMNS, WORK_TYPE_ORDER, WorkType
from .records import DateWindow, IncidentRecord, IngestReport, PermitRecord
from .column_mapping import ColumnMapping, MappingBundle, load_column_mapping
from .record_parser import parse_incidents, parse_permits
from .canonical_io import write_canonical_incidents, write_canonical_permits
