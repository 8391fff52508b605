#include "vizsig/container.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vizsig/error.hpp"

namespace vizsig {

namespace {

constexpr std::uint8_t kKindMatrix = 0;
constexpr std::uint8_t kKindStrings = 1;

template <typename T>
void put_le(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(b, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
    if (s.size() > UINT16_MAX) throw Error(Errc::invalid_argument, "container string too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            auto* b = reinterpret_cast<char*>(&v);
            std::reverse(b, b + sizeof(T));
        }
        pos_ += sizeof(T);
        return v;
    }

    std::string str() {
        const std::size_t len = get<std::uint16_t>();
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t k) const {
        if (bytes_.size() - pos_ < k) throw Error(Errc::truncated_payload, "truncated container");
    }

    std::string bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

void LabeledContainer::put(const std::string& name, Eigen::MatrixXd matrix) {
    strings_.erase(name);
    matrices_[name] = std::move(matrix);
}

void LabeledContainer::put_strings(const std::string& name, std::vector<std::string> values) {
    matrices_.erase(name);
    strings_[name] = std::move(values);
}

bool LabeledContainer::has(const std::string& name) const {
    return matrices_.contains(name) || strings_.contains(name);
}

const Eigen::MatrixXd& LabeledContainer::matrix(const std::string& name) const {
    auto it = matrices_.find(name);
    if (it == matrices_.end()) throw Error(Errc::malformed_header, "container has no matrix section '" + name + "'");
    return it->second;
}

const std::vector<std::string>& LabeledContainer::strings(const std::string& name) const {
    auto it = strings_.find(name);
    if (it == strings_.end()) throw Error(Errc::malformed_header, "container has no string section '" + name + "'");
    return it->second;
}

void LabeledContainer::save(const std::filesystem::path& path) const {
    std::map<std::string, bool> names;
    for (const auto& [k, _] : matrices_) names[k] = true;
    for (const auto& [k, _] : strings_) names[k] = false;

    std::string out = "VSIC";
    out.push_back(1);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(names.size()));
    for (const auto& [name, is_matrix] : names) {
        put_str(out, name);
        if (is_matrix) {
            const auto& m = matrices_.at(name);
            out.push_back(static_cast<char>(kKindMatrix));
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) put_le<double>(out, m(i, j));
        } else {
            const auto& s = strings_.at(name);
            out.push_back(static_cast<char>(kKindStrings));
            put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
            for (const auto& v : s) put_str(out, v);
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

LabeledContainer LabeledContainer::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    std::string bytes = std::move(buf).str();
    if (bytes.size() < 9 || bytes.compare(0, 4, "VSIC") != 0 || bytes[4] != 1) {
        throw Error(Errc::malformed_header, "malformed header: '" + path.string() + "' is not a VSIC v1 container");
    }
    Reader r(bytes.substr(5));
    LabeledContainer c;
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t s = 0; s < count; ++s) {
        std::string name = r.str();
        const auto kind = r.get<std::uint8_t>();
        if (kind == kKindMatrix) {
            const auto rows = r.get<std::uint32_t>();
            const auto cols = r.get<std::uint32_t>();
            Eigen::MatrixXd m(rows, cols);
            for (std::uint32_t i = 0; i < rows; ++i)
                for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = r.get<double>();
            c.matrices_[name] = std::move(m);
        } else if (kind == kKindStrings) {
            const auto n = r.get<std::uint32_t>();
            std::vector<std::string> values;
            values.reserve(n);
            for (std::uint32_t i = 0; i < n; ++i) values.push_back(r.str());
            c.strings_[name] = std::move(values);
        } else {
            throw Error(Errc::malformed_header, "unknown section kind in '" + path.string() + "'");
        }
    }
    if (!r.done()) throw Error(Errc::malformed_header, "trailing bytes in '" + path.string() + "'");
    return c;
}

}  // namespace vizsig
