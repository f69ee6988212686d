#pragma once

#include <istream>
#include <string>
#include <vector>

namespace geoling::csv {

// Minimal RFC 4180 reader: quoted fields, "" escapes, embedded separators and
// newlines inside quotes, CRLF or LF line endings.
class Reader {
  public:
    explicit Reader(std::istream& in) : in_(in) {}

    // Reads one record into `out`. Returns false at end of input.
    bool next(std::vector<std::string>& out);

  private:
    std::istream& in_;
};

// Quotes a field when it contains a separator, quote, or newline.
std::string escape(const std::string& field);

std::string join(const std::vector<std::string>& fields);

} // namespace geoling::csv
