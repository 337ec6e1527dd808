#pragma once

namespace fedsurv {

// Full command-line entry point. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 training failure.
int cli_main(int argc, const char* const* argv);

} // namespace fedsurv
