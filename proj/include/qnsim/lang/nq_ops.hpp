#pragma once
// Instruction signatures for quantum-routine bodies (unified-memory flavour).
//
// Operand shape letters:
//   r  register
//   v  register, immediate or template
//   i  immediate or template (no register)
//   o  immediate branch offset (relative, in instructions)
//   a  memory operand @array[index]

#include <optional>
#include <string>

namespace qnsim::lang {

enum class NqOpClass {
    Classical,   // register arithmetic, branches, load/store
    QuantumOne,  // gate on one qubit register operand
    QuantumTwo,  // gate on two qubit register operands
    QuantumAll,  // gate on every qubit held by the routine's program instance
};

struct NqSignature {
    const char* mnemonic;
    const char* shape; // one letter per operand
    NqOpClass cls;
    // For quantum ops: the gate name looked up in the hardware description
    // (empty for meas/init which are handled specially but still timed).
    const char* gate;
};

// Returns the signature, or nullopt for an unknown mnemonic.
std::optional<NqSignature> nq_signature(const std::string& mnemonic);

// True for instructions from the legacy shared-memory flavour that this
// runtime deliberately rejects (qalloc, array, create_epr, ...).
bool is_legacy_nq_instruction(const std::string& mnemonic);

} // namespace qnsim::lang
