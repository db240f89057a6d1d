#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gridswitch {

/// Versioned container of named shaped arrays, saved as a little-endian
/// binary file (magic "GSWCKPT1"). Doubles are stored bit-exactly, so
/// save/load round-trips reproduce parameters to the last bit.
class Checkpoint {
public:
    struct Entry {
        enum class Kind : std::uint8_t { F64 = 0, I64 = 1, Str = 2 };
        Kind kind = Kind::F64;
        std::vector<std::uint64_t> dims;
        std::vector<double> f64;
        std::vector<std::int64_t> i64;
        std::string str;
    };

    void put(const std::string& name, const Eigen::MatrixXd& m);
    void put(const std::string& name, const Eigen::VectorXd& v);
    void put_scalar(const std::string& name, double v);
    void put_int(const std::string& name, std::int64_t v);
    void put_string(const std::string& name, std::string v);

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    /// Shape-checked getters; throw CheckpointMismatch on absence or
    /// disagreement.
    Eigen::MatrixXd get_matrix(const std::string& name, Eigen::Index rows,
                               Eigen::Index cols) const;
    Eigen::VectorXd get_vector(const std::string& name, Eigen::Index size) const;
    Eigen::VectorXd get_vector(const std::string& name) const;
    double get_scalar(const std::string& name) const;
    std::int64_t get_int(const std::string& name) const;
    std::string get_string(const std::string& name) const;

    const std::map<std::string, Entry>& entries() const { return entries_; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

private:
    const Entry& require(const std::string& name, Entry::Kind kind) const;
    std::map<std::string, Entry> entries_;
};

} // namespace gridswitch
