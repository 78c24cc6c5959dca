/**
 * TrasoNET simulator.
 *
 * Minimal CSV helpers: fixed "%.6f" numbers so outputs diff byte-for-byte.
 */
#ifndef TRASONET_CSV_HPP
#define TRASONET_CSV_HPP

#include <cmath>
#include <cstdio>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace trasonet::csv
{

  inline std::string num(double v)
  {
    if (std::isnan(v))
      return "nan";
    if (v == 0.0)
      v = 0.0; // no "-0.000000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000")
      s = "0.000000";
    return s;
  }

  inline std::vector<std::string> split(std::string_view line)
  {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
      const std::size_t comma = line.find(',', start);
      std::string field(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
        field.pop_back();
      while (!field.empty() && field.front() == ' ')
        field.erase(field.begin());
      out.push_back(std::move(field));
      if (comma == std::string_view::npos)
        break;
      start = comma + 1;
    }
    return out;
  }

  /** Non-empty lines of a stream, CR stripped. */
  inline std::vector<std::string> lines(std::istream &in)
  {
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
    {
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (!line.empty())
        out.push_back(line);
    }
    return out;
  }

} // namespace trasonet::csv

#endif // TRASONET_CSV_HPP
