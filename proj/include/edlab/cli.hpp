#pragma once

namespace edlab {

// Entry point behind the edlab binary; exposed for direct testing.
// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int cli_main(int argc, const char* const* argv);

}  // namespace edlab
