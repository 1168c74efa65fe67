#include "syco/jsonl.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "syco/errors.hpp"

namespace syco {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(lineno, "malformed JSON record");
        fn(lineno, j);
    }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> out;
    for_each_jsonl(path, [&](std::size_t, const json& j) { out.push_back(j); });
    return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
    std::ostringstream buf;
    for (const auto& r : records) buf << r.dump() << '\n';
    atomic_write_file(path, buf.str());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    static std::atomic<unsigned> ctr{0};
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(ctr.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace syco
