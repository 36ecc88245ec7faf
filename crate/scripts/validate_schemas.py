"""Validate cryomux JSON artifacts against the schemas in data/schemas.

usage: python3 scripts/validate_schemas.py SCHEMA_NAME FILE [SCHEMA_NAME FILE ...]
"""

import json
import sys
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "data" / "schemas"


def registry():
    reg = Registry()
    schemas = {}
    for path in sorted(SCHEMA_DIR.glob("*.json")):
        schema = json.loads(path.read_text())
        jsonschema.Draft202012Validator.check_schema(schema)
        schemas[path.name] = schema
        reg = reg.with_resource(schema["$id"], Resource.from_contents(schema))
    return schemas, reg


def main(argv):
    if len(argv) % 2 != 0 or not argv:
        print(__doc__, file=sys.stderr)
        return 2
    schemas, reg = registry()
    failed = False
    for name, file in zip(argv[::2], argv[1::2]):
        validator = jsonschema.Draft202012Validator(schemas[name], registry=reg)
        errors = list(validator.iter_errors(json.loads(Path(file).read_text())))
        for err in errors:
            print(f"{file}: {list(err.absolute_path)}: {err.message}", file=sys.stderr)
        failed |= bool(errors)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
