#include "geoling/csv.hpp"

namespace geoling::csv {

bool Reader::next(std::vector<std::string>& out) {
    out.clear();
    int c = in_.get();
    if (c == std::istream::traits_type::eof()) return false;

    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    for (;;) {
        if (c == std::istream::traits_type::eof()) {
            if (!saw_any && field.empty() && out.empty()) return false;
            out.push_back(field);
            return true;
        }
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                const int peek = in_.peek();
                if (peek == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"' && field.empty()) {
            in_quotes = true;
            saw_any = true;
        } else if (ch == ',') {
            out.push_back(field);
            field.clear();
            saw_any = true;
        } else if (ch == '\n') {
            out.push_back(field);
            return true;
        } else if (ch == '\r') {
            if (in_.peek() == '\n') in_.get();
            out.push_back(field);
            return true;
        } else {
            field.push_back(ch);
            saw_any = true;
        }
        c = in_.get();
    }
}

std::string escape(const std::string& field) {
    const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

} // namespace geoling::csv
