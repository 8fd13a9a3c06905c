#pragma once

#include "soliton/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace soliton::detail {

inline std::ofstream open_csv(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

// Round-trip precision, locale independent.
inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace soliton::detail
