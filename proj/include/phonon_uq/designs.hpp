#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/geometry.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq {

namespace detail {

// 10 x 10 base designs, bottom row first.
inline const char* const square_design_text = R"(10
0 0 0 0 0 0 0 0 0 0
0 0 0 0 0 0 0 0 0 0
0 0 1 1 1 1 1 1 0 0
0 0 1 1 1 1 1 1 0 0
0 0 1 1 1 1 1 1 0 0
0 0 1 1 1 1 1 1 0 0
0 0 1 1 1 1 1 1 0 0
0 0 1 1 1 1 1 1 0 0
0 0 0 0 0 0 0 0 0 0
0 0 0 0 0 0 0 0 0 0
)";

inline const char* const cross_design_text = R"(10
0 0 0 0 0 0 0 0 0 0
0 0 0 1 1 1 1 0 0 0
0 0 0 1 1 1 1 0 0 0
0 1 1 1 1 1 1 1 1 0
0 1 1 1 1 1 1 1 1 0
0 1 1 1 1 1 1 1 1 0
0 1 1 1 1 1 1 1 1 0
0 0 0 1 1 1 1 0 0 0
0 0 0 1 1 1 1 0 0 0
0 0 0 0 0 0 0 0 0 0
)";

} // namespace detail

inline std::vector<std::string> builtin_design_names() { return {"square", "cross"}; }

/// "square": centred 6 x 6 hard inclusion; "cross": hard cross of 4-pixel arms.
inline UnitCellBitmap builtin_design(const std::string& name)
{
    const char* text = nullptr;
    if (name == "square") text = detail::square_design_text;
    else if (name == "cross") text = detail::cross_design_text;
    else throw InvalidArgument("unknown built-in design '" + name + "' (available: square, cross)");
    std::istringstream in(text);
    return parse_text_bitmap(in);
}

} // namespace phonon_uq
