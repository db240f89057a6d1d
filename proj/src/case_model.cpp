#include "gridswitch/case_model.hpp"

#include "gridswitch/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gridswitch {

namespace {

struct Matrix {
    std::vector<std::vector<double>> rows;
    std::vector<int> row_lines;  // source line of each row, for diagnostics
};

int line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

// Strip MATLAB comments; keeps newlines so line numbers stay meaningful.
std::string strip_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        out.push_back(in_comment ? ' ' : c);
    }
    return out;
}

std::vector<double> parse_row(const std::string& row_text, int line) {
    std::vector<double> values;
    const char* p = row_text.c_str();
    const char* end = p + row_text.size();
    while (p < end) {
        while (p < end && (std::isspace(static_cast<unsigned char>(*p)) || *p == ','))
            ++p;
        if (p >= end) break;
        char* next = nullptr;
        double v = std::strtod(p, &next);
        if (next == p)
            throw MalformedCase(line, std::string("unexpected token '") + *p + "'");
        values.push_back(v);
        p = next;
    }
    return values;
}

Matrix parse_matrix(const std::string& text, std::size_t open_bracket) {
    std::size_t close = text.find(']', open_bracket);
    if (close == std::string::npos)
        throw MalformedCase(line_of_offset(text, open_bracket), "unterminated matrix");
    Matrix m;
    std::size_t row_start = open_bracket + 1;
    // rows are separated by ';' or newlines
    for (std::size_t i = row_start; i <= close; ++i) {
        if (i == close || text[i] == ';' || text[i] == '\n') {
            std::string row_text = text.substr(row_start, i - row_start);
            int line = line_of_offset(text, row_start);
            auto values = parse_row(row_text, line);
            if (!values.empty()) {
                m.rows.push_back(std::move(values));
                m.row_lines.push_back(line);
            }
            row_start = i + 1;
        }
    }
    return m;
}

void require_columns(const Matrix& m, std::size_t n, const char* section) {
    for (std::size_t i = 0; i < m.rows.size(); ++i)
        if (m.rows[i].size() < n)
            throw MalformedCase(m.row_lines[i],
                                std::string(section) + " row has " +
                                    std::to_string(m.rows[i].size()) + " columns, needs " +
                                    std::to_string(n));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::size_t GridCase::slack_pos() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    throw InvalidCase("no slack bus");
}

bool operator==(const Bus& a, const Bus& b) {
    return a.id == b.id && a.kind == b.kind && a.p_load == b.p_load &&
           a.q_load == b.q_load && a.g_shunt == b.g_shunt && a.b_shunt == b.b_shunt &&
           a.v_mag_init == b.v_mag_init && a.v_ang_init == b.v_ang_init &&
           a.base_kv == b.base_kv && a.v_max == b.v_max && a.v_min == b.v_min;
}

bool operator==(const Branch& a, const Branch& b) {
    return a.from_bus == b.from_bus && a.to_bus == b.to_bus && a.r == b.r &&
           a.x == b.x && a.b_charging == b.b_charging && a.rate_a == b.rate_a &&
           a.tap_ratio == b.tap_ratio && a.phase_shift == b.phase_shift &&
           a.status_init == b.status_init;
}

bool operator==(const CostPolynomial& a, const CostPolynomial& b) {
    return a.coefficients == b.coefficients;
}

bool operator==(const Generator& a, const Generator& b) {
    return a.bus == b.bus && a.p_set == b.p_set && a.q_set == b.q_set &&
           a.v_set == b.v_set && a.p_max == b.p_max && a.p_min == b.p_min &&
           a.status == b.status && a.cost == b.cost;
}

bool operator==(const GridCase& a, const GridCase& b) {
    return a.base_mva == b.base_mva && a.buses == b.buses &&
           a.branches == b.branches && a.generators == b.generators;
}

GridCase parse_case(const std::string& raw_text) {
    const std::string text = strip_comments(raw_text);

    bool seen_base = false, seen_bus = false, seen_gen = false, seen_branch = false,
         seen_gencost = false;
    double base_mva = 0.0;
    Matrix bus_m, gen_m, branch_m, gencost_m;

    std::size_t pos = 0;
    while ((pos = text.find("mpc.", pos)) != std::string::npos) {
        std::size_t name_start = pos + 4;
        std::size_t name_end = name_start;
        while (name_end < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[name_end])) ||
                text[name_end] == '_'))
            ++name_end;
        std::string name = text.substr(name_start, name_end - name_start);
        int line = line_of_offset(text, pos);

        std::size_t eq = text.find_first_not_of(" \t", name_end);
        if (eq == std::string::npos || text[eq] != '=')
            throw MalformedCase(line, "expected '=' after mpc." + name);
        std::size_t rhs = text.find_first_not_of(" \t", eq + 1);
        if (rhs == std::string::npos)
            throw MalformedCase(line, "missing value for mpc." + name);

        if (name == "baseMVA") {
            char* next = nullptr;
            base_mva = std::strtod(text.c_str() + rhs, &next);
            if (next == text.c_str() + rhs || base_mva <= 0.0)
                throw MalformedCase(line, "bad baseMVA");
            seen_base = true;
            pos = static_cast<std::size_t>(next - text.c_str());
        } else if (name == "version") {
            // tolerated, value ignored
            pos = text.find(';', rhs);
            if (pos == std::string::npos) pos = text.size();
        } else if (name == "bus" || name == "gen" || name == "branch" ||
                   name == "gencost") {
            if (text[rhs] != '[')
                throw MalformedCase(line, "expected matrix for mpc." + name);
            Matrix m = parse_matrix(text, rhs);
            if (name == "bus") { bus_m = std::move(m); seen_bus = true; }
            else if (name == "gen") { gen_m = std::move(m); seen_gen = true; }
            else if (name == "branch") { branch_m = std::move(m); seen_branch = true; }
            else { gencost_m = std::move(m); seen_gencost = true; }
            pos = text.find(']', rhs) + 1;
        } else {
            throw MalformedCase(line, "unsupported section mpc." + name);
        }
    }

    if (!seen_base) throw MissingSection("baseMVA");
    if (!seen_bus) throw MissingSection("bus");
    if (!seen_gen) throw MissingSection("gen");
    if (!seen_branch) throw MissingSection("branch");

    require_columns(bus_m, 13, "bus");
    require_columns(gen_m, 10, "gen");
    require_columns(branch_m, 13, "branch");

    GridCase grid;
    grid.base_mva = base_mva;

    for (std::size_t i = 0; i < bus_m.rows.size(); ++i) {
        const auto& row = bus_m.rows[i];
        Bus bus;
        bus.id = static_cast<int>(row[0]);
        int type = static_cast<int>(row[1]);
        switch (type) {
            case 1: bus.kind = BusKind::PQ; break;
            case 2: bus.kind = BusKind::PV; break;
            case 3: bus.kind = BusKind::Slack; break;
            default:
                throw MalformedCase(bus_m.row_lines[i],
                                    "unsupported bus type " + std::to_string(type));
        }
        bus.p_load = row[2];
        bus.q_load = row[3];
        bus.g_shunt = row[4];
        bus.b_shunt = row[5];
        bus.v_mag_init = row[7];
        bus.v_ang_init = row[8];
        bus.base_kv = row[9];
        bus.v_max = row[11];
        bus.v_min = row[12];
        if (grid.bus_index.count(bus.id)) throw DuplicateBusId(bus.id);
        grid.bus_index[bus.id] = grid.buses.size();
        grid.buses.push_back(bus);
    }

    for (std::size_t i = 0; i < branch_m.rows.size(); ++i) {
        const auto& row = branch_m.rows[i];
        Branch br;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        br.r = row[2];
        br.x = row[3];
        br.b_charging = row[4];
        br.rate_a = row[5];
        br.tap_ratio = row[8] == 0.0 ? 1.0 : row[8];  // MATPOWER: 0 means nominal
        br.phase_shift = row[9];
        br.status_init = row[10] != 0.0;
        if (!grid.bus_index.count(br.from_bus) || !grid.bus_index.count(br.to_bus))
            throw MalformedCase(branch_m.row_lines[i], "branch references unknown bus");
        grid.branches.push_back(br);
    }

    for (std::size_t i = 0; i < gen_m.rows.size(); ++i) {
        const auto& row = gen_m.rows[i];
        Generator gen;
        gen.bus = static_cast<int>(row[0]);
        gen.p_set = row[1];
        gen.q_set = row[2];
        gen.v_set = row[5];
        gen.status = row[7] != 0.0;
        gen.p_max = row[8];
        gen.p_min = row[9];
        if (!grid.bus_index.count(gen.bus))
            throw MalformedCase(gen_m.row_lines[i], "generator references unknown bus");
        grid.generators.push_back(gen);
    }

    if (seen_gencost) {
        if (gencost_m.rows.size() != grid.generators.size())
            throw MalformedCase(
                gencost_m.rows.empty() ? 0 : gencost_m.row_lines[0],
                "gencost rows (" + std::to_string(gencost_m.rows.size()) +
                    ") != generators (" + std::to_string(grid.generators.size()) + ")");
        for (std::size_t i = 0; i < gencost_m.rows.size(); ++i) {
            const auto& row = gencost_m.rows[i];
            if (row.size() < 4)
                throw MalformedCase(gencost_m.row_lines[i], "short gencost row");
            int model = static_cast<int>(row[0]);
            if (model != 2)
                throw MalformedCase(gencost_m.row_lines[i],
                                    "only polynomial gencost (model 2) supported");
            int n = static_cast<int>(row[3]);
            if (n < 1 || row.size() < 4 + static_cast<std::size_t>(n))
                throw MalformedCase(gencost_m.row_lines[i], "bad gencost coefficient count");
            grid.generators[i].cost.coefficients.assign(row.begin() + 4,
                                                        row.begin() + 4 + n);
        }
    }
    // gencost absent: all generators keep the default zero polynomial

    return grid;
}

GridCase load_case(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CaseLoadError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw CaseLoadError("read failure on case file: " + path);
    return parse_case(ss.str());
}

std::vector<Issue> validate(const GridCase& grid) {
    std::vector<Issue> issues;
    auto add = [&](Issue::Code code, std::size_t index, std::string msg) {
        issues.push_back({code, index, std::move(msg)});
    };

    std::size_t slack_count = 0;
    for (std::size_t i = 0; i < grid.buses.size(); ++i) {
        const Bus& bus = grid.buses[i];
        if (bus.kind == BusKind::Slack) ++slack_count;
        if (!(bus.v_min < bus.v_max))
            add(Issue::Code::BadVoltageBand, i,
                "bus " + std::to_string(bus.id) + ": v_min >= v_max");
        if (!(bus.v_mag_init > 0.0))
            add(Issue::Code::BadInitVoltage, i,
                "bus " + std::to_string(bus.id) + ": non-positive initial voltage");
    }
    if (slack_count == 0) add(Issue::Code::NoSlack, 0, "no slack bus");
    if (slack_count > 1)
        add(Issue::Code::MultipleSlack, 0,
            std::to_string(slack_count) + " slack buses");

    for (std::size_t k = 0; k < grid.branches.size(); ++k) {
        const Branch& br = grid.branches[k];
        // every branch is switchable, so x == 0 is a problem regardless of
        // its initial status
        if (br.x == 0.0)
            add(Issue::Code::ZeroReactance, k, "branch " + std::to_string(k) + ": x == 0");
        if (br.r < 0.0)
            add(Issue::Code::NegativeResistance, k, "branch " + std::to_string(k) + ": r < 0");
        if (br.rate_a < 0.0)
            add(Issue::Code::NegativeRating, k, "branch " + std::to_string(k) + ": rate_a < 0");
    }

    for (std::size_t g = 0; g < grid.generators.size(); ++g) {
        const Generator& gen = grid.generators[g];
        if (gen.status && !(gen.p_min <= gen.p_set && gen.p_set <= gen.p_max))
            add(Issue::Code::DispatchOutOfBounds, g,
                "generator " + std::to_string(g) + ": p_set outside [p_min, p_max]");
        if (gen.cost.coefficients.empty())
            add(Issue::Code::EmptyCostPolynomial, g,
                "generator " + std::to_string(g) + ": empty cost polynomial");
        else {
            for (double p : {gen.p_min, gen.p_set, gen.p_max})
                if (!std::isfinite(gen.cost.eval(p))) {
                    add(Issue::Code::NonFiniteCost, g,
                        "generator " + std::to_string(g) + ": cost not finite");
                    break;
                }
        }
    }
    return issues;
}

std::vector<std::size_t> switchable_lines(const GridCase& grid) {
    std::vector<std::size_t> lines(grid.branches.size());
    for (std::size_t k = 0; k < lines.size(); ++k) lines[k] = k;
    return lines;
}

std::string serialize_case(const GridCase& grid) {
    std::ostringstream out;
    out << "function mpc = case\n";
    out << "mpc.version = '2';\n";
    out << "mpc.baseMVA = " << format_double(grid.base_mva) << ";\n";

    out << "mpc.bus = [\n";
    for (const Bus& b : grid.buses) {
        int type = b.kind == BusKind::PQ ? 1 : b.kind == BusKind::PV ? 2 : 3;
        out << "\t" << b.id << "\t" << type << "\t" << format_double(b.p_load) << "\t"
            << format_double(b.q_load) << "\t" << format_double(b.g_shunt) << "\t"
            << format_double(b.b_shunt) << "\t1\t" << format_double(b.v_mag_init)
            << "\t" << format_double(b.v_ang_init) << "\t" << format_double(b.base_kv)
            << "\t1\t" << format_double(b.v_max) << "\t" << format_double(b.v_min)
            << ";\n";
    }
    out << "];\n";

    out << "mpc.gen = [\n";
    for (const Generator& g : grid.generators) {
        out << "\t" << g.bus << "\t" << format_double(g.p_set) << "\t"
            << format_double(g.q_set) << "\t0\t0\t" << format_double(g.v_set)
            << "\t" << format_double(grid.base_mva) << "\t" << (g.status ? 1 : 0)
            << "\t" << format_double(g.p_max) << "\t" << format_double(g.p_min)
            << ";\n";
    }
    out << "];\n";

    out << "mpc.branch = [\n";
    for (const Branch& br : grid.branches) {
        out << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << format_double(br.r)
            << "\t" << format_double(br.x) << "\t" << format_double(br.b_charging)
            << "\t" << format_double(br.rate_a) << "\t0\t0\t"
            << format_double(br.tap_ratio) << "\t" << format_double(br.phase_shift)
            << "\t" << (br.status_init ? 1 : 0) << "\t-360\t360;\n";
    }
    out << "];\n";

    out << "mpc.gencost = [\n";
    for (const Generator& g : grid.generators) {
        out << "\t2\t0\t0\t" << g.cost.coefficients.size();
        for (double c : g.cost.coefficients) out << "\t" << format_double(c);
        out << ";\n";
    }
    out << "];\n";
    return out.str();
}

} // namespace gridswitch
