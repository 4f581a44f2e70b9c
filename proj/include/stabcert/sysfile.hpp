#ifndef STABCERT_SYSFILE_HPP
#define STABCERT_SYSFILE_HPP

#include <string>

#include "stabcert/system.hpp"

namespace stabcert {

// System-definition file: one self-contained JSON document per system.
//
// {
//   "name": "...",
//   "variables": ["q", "p"],
//   "periodic": [false, false],            // optional, defaults to all false
//   "dynamics": {
//     "type": "hamiltonian" | "field",
//     "hamiltonian": "expr",               // hamiltonian type
//     "symplectic": {"type": "canonical"}  //   or {"type":"matrix","W":[[...]]}
//     "components": ["expr", ...]          // field type
//   },
//   "conserved": [{"name": "...", "expr": "..."}],   // optional
//   "parameters": {"name": value}                    // optional
// }

/// Parse a definition document. Throws DefinitionError with a descriptive
/// message on any schema or invariant violation.
SystemDef parse_system_json(const std::string& text);

/// Load from a file path.
SystemDef load_system_file(const std::string& path);

/// Resolve a CLI `<sys>` argument: a corpus id first, a file path second.
SystemDef resolve_system(const std::string& id_or_path);

}  // namespace stabcert

#endif  // STABCERT_SYSFILE_HPP
