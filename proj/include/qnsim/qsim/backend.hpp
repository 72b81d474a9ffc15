#pragma once
// Density-matrix quantum state backend.
//
// Qubits live in "groups": a group is a set of qubits whose joint state is
// one density matrix. Groups merge when a multi-qubit gate spans two groups
// and split again when a measurement leaves a qubit in a product state.
// Group size is capped (configurable) so matrices stay small.
//
// Decoherence is lazy: each qubit remembers when it was last touched, and
// amplitude damping (T1) plus pure dephasing (total off-diagonal decay
// exp(-dt/T2)) are applied for the elapsed interval right before the next
// operation on that qubit. Operations on distinct qubits commute with these
// single-qubit channels, so laziness does not change any observable.

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <vector>

#include "qnsim/common.hpp"

namespace qnsim::qsim {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

enum class Basis { Z, X, Y };

// --- gate matrix helpers ---------------------------------------------------

Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();
Mat2 hadamard();
// exp(-i*theta/2 * sigma_axis), axis in {'x','y','z'}
Mat2 rot_matrix(char axis, double theta);
Mat4 cnot_matrix();   // first qubit controls, second is target
Mat4 cphase_matrix(); // controlled-Z
// Controlled rotation: |1><1| on the first qubit gates rot_matrix on the second.
Mat4 crot_matrix(char axis, double theta);

// --- backend ----------------------------------------------------------------

class Backend {
public:
    explicit Backend(int group_cap = 6) : cap_(group_cap) {}

    // Registers a qubit with its decoherence times (ns; may be infinite).
    // Returned id is global and stable. The qubit starts blank (no state).
    int add_qubit(double t1, double t2);

    int num_qubits() const { return static_cast<int>(qubits_.size()); }
    int group_cap() const { return cap_; }
    bool is_active(int q) const { return qubits_.at(q).group >= 0; }

    // Resets q to |0><0| in a fresh group (initialisation). If the qubit was
    // part of an entangled group it is traced out of it first.
    void reset(int q, time_ns now);

    // Discards q: traced out of its group and returned to blank.
    void discard(int q, time_ns now);

    // Single-qubit unitary, then per-qubit depolarising noise with
    // probability `depolar`.
    void apply_1q(int q, const Mat2& u, time_ns now, double depolar = 0.0);

    // Two-qubit unitary; `qa` is the high-order bit of the 4x4 matrix.
    // Merges groups as needed.
    void apply_2q(int qa, int qb, const Mat4& u, time_ns now, double depolar = 0.0);

    // exp(-i*theta/2 * sum_{i<j} X_i X_j) over the given qubits (>=2).
    void apply_xx_all(const std::vector<int>& qs, double theta, time_ns now,
                      double depolar = 0.0);

    // Projective measurement in the given basis. Outcome bit 0 corresponds to
    // the +1 eigenstate. The qubit stays active in the post-measurement
    // eigenstate, split into its own group.
    int measure(int q, Basis b, time_ns now, Rng& rng);

    // Places the two (blank) qubits in the Werner state
    //   F |phi+><phi+| + (1-F)/3 (I - |phi+><phi+|).
    void create_werner_pair(int qa, int qb, double fidelity, time_ns now);

    // Joint state of q's group with pending decoherence applied up to `now`,
    // without disturbing the lazy timestamps. Row/column bit order follows
    // group_members(): first member is the most significant bit.
    Mat peek_group(int q, time_ns now) const;
    std::vector<int> group_members(int q) const;

    // Verifies trace, hermiticity and positivity of every live group.
    // Throws InternalError on violation.
    void check_invariants(double tol = 1e-9) const;

private:
    struct Qubit {
        double t1 = kInf, t2 = kInf;
        int group = -1;       // -1: blank
        time_ns last = 0;     // last time decoherence was applied
    };
    struct Group {
        std::vector<int> members; // qubit ids; index = bit position (0 = MSB)
        Mat rho;
    };

    int pos_in_group(const Group& g, int q) const;
    Group& group_of(int q);
    const Group& group_of(int q) const;
    // Applies pending T1/T2 decoherence to q within `rho` (members layout of g).
    static void apply_decoherence(Mat& rho, int pos, int n, double dt, double t1, double t2);
    void elapse(int q, time_ns now);
    // Removes q from group g by partial trace; q becomes blank.
    void trace_out(int q, time_ns now);
    // Removes q from g assuming the state is a product w.r.t. q (after
    // measurement); q gets its own group with the given pure state.
    void split_off(int q, const Mat2& pure);
    int merge(int qa, int qb, time_ns now); // returns surviving group id
    int new_group(int q, const Mat& rho);

    void depolarize(int q, double p);

    int cap_;
    int next_group_ = 0;
    std::vector<Qubit> qubits_;
    std::map<int, Group> groups_;
};

// Lifts `u` acting on bit position `pos` (0 = MSB) of an n-qubit space.
Mat lift_1q(const Mat2& u, int pos, int n);
// Lifts a two-qubit operator with bit `pa` high and `pb` low.
Mat lift_2q(const Mat4& u, int pa, int pb, int n);
// Partial trace over bit position `pos` of an n-qubit density matrix.
Mat partial_trace(const Mat& rho, int pos, int n);

} // namespace qnsim::qsim
