#pragma once

// Command-line front end, linkable from tests. Subcommands:
//   solve-state | optimize | verify | demo-multiplicity | demo-bangbang |
//   list-instances
// Exit codes: 0 success, 1 verification failure, 2 solver failure,
// 3 configuration error. PLOC_VERBOSITY (0, 1, 2) selects output volume.

namespace ploc {

int cli_main(int argc, const char* const* argv);

}  // namespace ploc
