#pragma once

#include <string>

namespace gridswitch::testing {

inline std::string data_path(const std::string& name) {
    return std::string(GRIDSWITCH_DATA_DIR) + "/" + name;
}

// slack + one PQ bus drawing 1.0 pu through a single x = 0.1 line
inline const char* kTwoBusCase = R"(
function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0    0  0  0  1  1.0  0  138  1  1.1  0.9;
    2  1  100  0  0  0  1  1.0  0  138  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  999  -999  1.0  100  1  999  0;
];
mpc.branch = [
    1  2  0  0.1  0  0  0  0  0  0  1  -360  360;
];
mpc.gencost = [
    2  0  0  3  0.02  30  0;
];
)";

// same grid with series resistance for loss checks
inline const char* kTwoBusLossyCase = R"(
function mpc = case2r
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0    0  0  0  1  1.0  0  138  1  1.1  0.9;
    2  1  100  0  0  0  1  1.0  0  138  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  999  -999  1.0  100  1  999  0;
];
mpc.branch = [
    1  2  0.01  0.1  0  0  0  0  0  0  1  -360  360;
];
mpc.gencost = [
    2  0  0  3  0.02  30  0;
];
)";

// three buses in a ring, loads on 2 and 3
inline const char* kThreeBusRingCase = R"(
function mpc = case3
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0   0  0  0  1  1.0  0  138  1  1.1  0.9;
    2  1  50  10 0  0  1  1.0  0  138  1  1.1  0.9;
    3  1  40  5  0  0  1  1.0  0  138  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  999  -999  1.0  100  1  999  0;
];
mpc.branch = [
    1  2  0.01  0.08  0.02  0  0  0  0  0  1  -360  360;
    2  3  0.01  0.08  0.02  0  0  0  0  0  1  -360  360;
    3  1  0.01  0.08  0.02  0  0  0  0  0  1  -360  360;
];
mpc.gencost = [
    2  0  0  3  0.02  30  0;
];
)";

} // namespace gridswitch::testing
