#include "qnsim/lang/nq_ops.hpp"

#include <array>

namespace qnsim::lang {

namespace {

constexpr std::array kSignatures = {
    // classical
    NqSignature{"set", "ri", NqOpClass::Classical, ""},
    NqSignature{"add", "rvv", NqOpClass::Classical, ""},
    NqSignature{"sub", "rvv", NqOpClass::Classical, ""},
    NqSignature{"addm", "rvvv", NqOpClass::Classical, ""},
    NqSignature{"subm", "rvvv", NqOpClass::Classical, ""},
    NqSignature{"div", "rvv", NqOpClass::Classical, ""},
    NqSignature{"rem", "rvv", NqOpClass::Classical, ""},
    NqSignature{"jmp", "o", NqOpClass::Classical, ""},
    NqSignature{"bez", "vo", NqOpClass::Classical, ""},
    NqSignature{"bnz", "vo", NqOpClass::Classical, ""},
    NqSignature{"beq", "vvo", NqOpClass::Classical, ""},
    NqSignature{"bne", "vvo", NqOpClass::Classical, ""},
    NqSignature{"blt", "vvo", NqOpClass::Classical, ""},
    NqSignature{"bge", "vvo", NqOpClass::Classical, ""},
    NqSignature{"load", "ra", NqOpClass::Classical, ""},
    NqSignature{"store", "ra", NqOpClass::Classical, ""},
    // one-qubit
    NqSignature{"init", "r", NqOpClass::QuantumOne, "init"},
    NqSignature{"meas", "rr", NqOpClass::QuantumOne, "meas"},
    NqSignature{"x", "r", NqOpClass::QuantumOne, "x"},
    NqSignature{"y", "r", NqOpClass::QuantumOne, "y"},
    NqSignature{"z", "r", NqOpClass::QuantumOne, "z"},
    NqSignature{"h", "r", NqOpClass::QuantumOne, "h"},
    NqSignature{"rot_x", "rvi", NqOpClass::QuantumOne, "rot_x"},
    NqSignature{"rot_y", "rvi", NqOpClass::QuantumOne, "rot_y"},
    NqSignature{"rot_z", "rvi", NqOpClass::QuantumOne, "rot_z"},
    // two-qubit
    NqSignature{"cnot", "rr", NqOpClass::QuantumTwo, "cnot"},
    NqSignature{"cphase", "rr", NqOpClass::QuantumTwo, "cphase"},
    NqSignature{"crot_x", "rrvi", NqOpClass::QuantumTwo, "crot_x"},
    NqSignature{"crot_y", "rrvi", NqOpClass::QuantumTwo, "crot_y"},
    // collective
    NqSignature{"init_all", "", NqOpClass::QuantumAll, "init_all"},
    NqSignature{"meas_all", "r", NqOpClass::QuantumAll, "meas_all"},
    NqSignature{"rot_x_all", "vi", NqOpClass::QuantumAll, "rot_x_all"},
    NqSignature{"rot_y_all", "vi", NqOpClass::QuantumAll, "rot_y_all"},
    NqSignature{"rot_z_all", "vi", NqOpClass::QuantumAll, "rot_z_all"},
    NqSignature{"bichromatic", "vi", NqOpClass::QuantumAll, "bichromatic"},
};

constexpr const char* kLegacy[] = {
    "qalloc",      "qfree",    "array",    "create_epr", "recv_epr",
    "wait_all",    "wait_any", "wait_single", "ret_reg", "ret_arr",
    "undef",       "lea",      "breakpoint",
};

} // namespace

std::optional<NqSignature> nq_signature(const std::string& mnemonic) {
    for (const auto& s : kSignatures) {
        if (mnemonic == s.mnemonic) return s;
    }
    return std::nullopt;
}

bool is_legacy_nq_instruction(const std::string& mnemonic) {
    for (const char* m : kLegacy) {
        if (mnemonic == m) return true;
    }
    return false;
}

} // namespace qnsim::lang
