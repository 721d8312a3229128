#pragma once

#include <ostream>

namespace wms::cli {

/// Exit codes: 0 success, 1 user error (usage, unknown job, bad input),
/// 2 internal error (storage, unexpected failure).
enum Exit { Ok = 0, UserError = 1, InternalError = 2 };

/// Runs one `wms` invocation. The installation root comes from --home,
/// else WMS_HOME, else ./wms-home.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace wms::cli
