#include "gridswitch/checkpoint.hpp"

#include "gridswitch/errors.hpp"

#include <cstring>
#include <fstream>

namespace gridswitch {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'W', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

void Checkpoint::put(const std::string& name, const Eigen::MatrixXd& m) {
    Entry e;
    e.kind = Entry::Kind::F64;
    e.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    e.f64.assign(m.data(), m.data() + m.size());  // column-major
    entries_[name] = std::move(e);
}

void Checkpoint::put(const std::string& name, const Eigen::VectorXd& v) {
    Entry e;
    e.kind = Entry::Kind::F64;
    e.dims = {static_cast<std::uint64_t>(v.size())};
    e.f64.assign(v.data(), v.data() + v.size());
    entries_[name] = std::move(e);
}

void Checkpoint::put_scalar(const std::string& name, double v) {
    Entry e;
    e.kind = Entry::Kind::F64;
    e.dims = {};
    e.f64 = {v};
    entries_[name] = std::move(e);
}

void Checkpoint::put_int(const std::string& name, std::int64_t v) {
    Entry e;
    e.kind = Entry::Kind::I64;
    e.dims = {};
    e.i64 = {v};
    entries_[name] = std::move(e);
}

void Checkpoint::put_string(const std::string& name, std::string v) {
    Entry e;
    e.kind = Entry::Kind::Str;
    e.str = std::move(v);
    entries_[name] = std::move(e);
}

const Checkpoint::Entry& Checkpoint::require(const std::string& name,
                                             Entry::Kind kind) const {
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw CheckpointMismatch("checkpoint entry missing: " + name);
    if (it->second.kind != kind)
        throw CheckpointMismatch("checkpoint entry has wrong type: " + name);
    return it->second;
}

Eigen::MatrixXd Checkpoint::get_matrix(const std::string& name, Eigen::Index rows,
                                       Eigen::Index cols) const {
    const Entry& e = require(name, Entry::Kind::F64);
    if (e.dims.size() != 2 || e.dims[0] != static_cast<std::uint64_t>(rows) ||
        e.dims[1] != static_cast<std::uint64_t>(cols))
        throw CheckpointMismatch("shape mismatch for " + name);
    Eigen::MatrixXd m(rows, cols);
    std::memcpy(m.data(), e.f64.data(), e.f64.size() * sizeof(double));
    return m;
}

Eigen::VectorXd Checkpoint::get_vector(const std::string& name, Eigen::Index size) const {
    const Entry& e = require(name, Entry::Kind::F64);
    if (e.dims.size() != 1 || e.dims[0] != static_cast<std::uint64_t>(size))
        throw CheckpointMismatch("shape mismatch for " + name);
    Eigen::VectorXd v(size);
    std::memcpy(v.data(), e.f64.data(), e.f64.size() * sizeof(double));
    return v;
}

Eigen::VectorXd Checkpoint::get_vector(const std::string& name) const {
    const Entry& e = require(name, Entry::Kind::F64);
    if (e.dims.size() != 1)
        throw CheckpointMismatch("entry is not a vector: " + name);
    Eigen::VectorXd v(static_cast<Eigen::Index>(e.dims[0]));
    std::memcpy(v.data(), e.f64.data(), e.f64.size() * sizeof(double));
    return v;
}

double Checkpoint::get_scalar(const std::string& name) const {
    const Entry& e = require(name, Entry::Kind::F64);
    if (!e.dims.empty() || e.f64.size() != 1)
        throw CheckpointMismatch("entry is not a scalar: " + name);
    return e.f64[0];
}

std::int64_t Checkpoint::get_int(const std::string& name) const {
    const Entry& e = require(name, Entry::Kind::I64);
    if (e.i64.size() != 1)
        throw CheckpointMismatch("entry is not an integer: " + name);
    return e.i64[0];
}

std::string Checkpoint::get_string(const std::string& name) const {
    return require(name, Entry::Kind::Str).str;
}

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint64_t>(out, entries_.size());
    for (const auto& [name, e] : entries_) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
        write_pod<std::uint64_t>(out, e.dims.size());
        for (std::uint64_t d : e.dims) write_pod(out, d);
        switch (e.kind) {
            case Entry::Kind::F64:
                write_pod<std::uint64_t>(out, e.f64.size());
                out.write(reinterpret_cast<const char*>(e.f64.data()),
                          static_cast<std::streamsize>(e.f64.size() * sizeof(double)));
                break;
            case Entry::Kind::I64:
                write_pod<std::uint64_t>(out, e.i64.size());
                out.write(reinterpret_cast<const char*>(e.i64.data()),
                          static_cast<std::streamsize>(e.i64.size() * sizeof(std::int64_t)));
                break;
            case Entry::Kind::Str:
                write_pod<std::uint64_t>(out, e.str.size());
                out.write(e.str.data(), static_cast<std::streamsize>(e.str.size()));
                break;
        }
    }
    if (!out) throw IoError("write failure: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointMismatch("not a checkpoint file: " + path);

    Checkpoint ckpt;
    const auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        Entry e;
        e.kind = static_cast<Entry::Kind>(read_pod<std::uint8_t>(in));
        const auto rank = read_pod<std::uint64_t>(in);
        e.dims.resize(rank);
        for (auto& d : e.dims) d = read_pod<std::uint64_t>(in);
        const auto n = read_pod<std::uint64_t>(in);
        switch (e.kind) {
            case Entry::Kind::F64:
                e.f64.resize(n);
                in.read(reinterpret_cast<char*>(e.f64.data()),
                        static_cast<std::streamsize>(n * sizeof(double)));
                break;
            case Entry::Kind::I64:
                e.i64.resize(n);
                in.read(reinterpret_cast<char*>(e.i64.data()),
                        static_cast<std::streamsize>(n * sizeof(std::int64_t)));
                break;
            case Entry::Kind::Str:
                e.str.resize(n);
                in.read(e.str.data(), static_cast<std::streamsize>(n));
                break;
        }
        if (!in) throw CheckpointMismatch("truncated checkpoint: " + path);
        ckpt.entries_[name] = std::move(e);
    }
    return ckpt;
}

} // namespace gridswitch
