// Generated by tools/embed_cv_table.py from a simulation run; do not edit by
// hand. Regenerate with `panelbreak cv simulate --pw <p> --trim <e> --kmax <k>
// --reps 100000 --grid 2000 --out table.csv` once per combination, merge into
// data/critical_values.csv, then
//   python3 tools/embed_cv_table.py data/critical_values.csv > src/cv_table_data.cpp

namespace panelbreak {
namespace detail {

extern const char* const embedded_cv_csv;
const char* const embedded_cv_csv =
    "# panel break critical values\n"
    "# source=placeholder seed=0 reps=0 grid=0 generated=unset\n"
    "kind,p_w,epsilon,k,param,value,se\n";

}  // namespace detail
}  // namespace panelbreak
