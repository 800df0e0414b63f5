#pragma once

#include <iosfwd>

namespace ltvid::cli {

// Exit statuses.
enum Status : int {
    Ok = 0,
    ConfigFailure = 1,   // bad flags, infeasible settings, invalid regularizer
    DataFailure = 2,     // unreadable/malformed input, dimension mismatch, I/O
    NotConverged = 3,    // artifacts written, solver stopped at the iteration cap
    IllPosed = 4,        // unidentifiable parameters
    Unstable = 5,        // generator blow-up
    InternalFailure = 6,
};

// Runs one command line. Results go to files or `out`; errors are written to
// `err` as a single JSON object {"error": kind, "message": ...}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ltvid::cli
