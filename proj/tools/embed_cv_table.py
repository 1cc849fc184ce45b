#!/usr/bin/env python3
"""Turn a critical-value CSV into src/cv_table_data.cpp.

Usage: python3 tools/embed_cv_table.py data/critical_values.csv > src/cv_table_data.cpp

The table ships inside the library so the common cases need no files at run
time; PANELBREAK_CV_TABLE or --cv-table still override it.
"""

import sys

HEADER = """\
// Generated by tools/embed_cv_table.py from a simulation run; do not edit by
// hand. Regenerate with `panelbreak cv simulate --pw <p> --trim <e> --kmax <k>
// --reps 100000 --grid 2000 --out table.csv` once per combination, merge into
// data/critical_values.csv, then
//   python3 tools/embed_cv_table.py data/critical_values.csv > src/cv_table_data.cpp

namespace panelbreak {
namespace detail {

extern const char* const embedded_cv_csv;
const char* const embedded_cv_csv =
"""

FOOTER = """\
;

}  // namespace detail
}  // namespace panelbreak
"""


def escape(line: str) -> str:
    return line.replace("\\", "\\\\").replace('"', '\\"')


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    with open(sys.argv[1], encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        print("error: input does not look like a critical-value CSV", file=sys.stderr)
        return 2
    out = sys.stdout
    out.write(HEADER)
    for i, line in enumerate(lines):
        sep = "\n" if i + 1 < len(lines) else FOOTER
        out.write(f'    "{escape(line)}\\n"{sep}')
    return 0


if __name__ == "__main__":
    sys.exit(main())
