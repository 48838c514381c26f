#include "rubricrank/jsonl.hpp"

#include <charconv>

#include "rubricrank/error.hpp"

namespace rubricrank {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(path.string(), line_no, "expected a JSON object");
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, std::string_view header_comment)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    if (!header_comment.empty()) out_ << "# " << header_comment << '\n';
}

void JsonlWriter::write(const nlohmann::ordered_json& record) {
    out_ << record.dump() << '\n';
    ++count_;
}

void JsonlWriter::close() {
    out_.flush();
    const bool ok = static_cast<bool>(out_);
    out_.close();
    if (!ok) throw Error(ErrorCode::IoError, "write failed for " + path_.string());
}

std::string trim_trailing_newline(std::string text) {
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace rubricrank
