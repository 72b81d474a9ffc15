#include "qnsim/qsim/backend.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qnsim::qsim {

// --- gate matrices -----------------------------------------------------------

Mat2 pauli_x() {
    Mat2 m;
    m << 0, 1, 1, 0;
    return m;
}
Mat2 pauli_y() {
    Mat2 m;
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
Mat2 pauli_z() {
    Mat2 m;
    m << 1, 0, 0, -1;
    return m;
}
Mat2 hadamard() {
    Mat2 m;
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}

Mat2 rot_matrix(char axis, double theta) {
    Mat2 p;
    switch (axis) {
    case 'x': p = pauli_x(); break;
    case 'y': p = pauli_y(); break;
    case 'z': p = pauli_z(); break;
    default: throw InternalError("rot_matrix: bad axis");
    }
    double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    return c * Mat2::Identity() - cplx(0, 1) * s * p;
}

Mat4 cnot_matrix() {
    Mat4 m = Mat4::Zero();
    m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
    return m;
}

Mat4 cphase_matrix() {
    Mat4 m = Mat4::Identity();
    m(3, 3) = -1;
    return m;
}

Mat4 crot_matrix(char axis, double theta) {
    Mat4 m = Mat4::Identity();
    Mat2 r = rot_matrix(axis, theta);
    m.block<2, 2>(2, 2) = r;
    return m;
}

// --- lifting helpers ----------------------------------------------------------

Mat lift_1q(const Mat2& u, int pos, int n) {
    int dim = 1 << n;
    int bit = n - 1 - pos; // bit index from LSB
    Mat out = Mat::Zero(dim, dim);
    for (int r = 0; r < dim; ++r) {
        int rb = (r >> bit) & 1;
        int rrest = r & ~(1 << bit);
        for (int cb = 0; cb < 2; ++cb) {
            int c = rrest | (cb << bit);
            out(r, c) = u(rb, cb);
        }
    }
    return out;
}

Mat lift_2q(const Mat4& u, int pa, int pb, int n) {
    int dim = 1 << n;
    int ba = n - 1 - pa, bb = n - 1 - pb;
    Mat out = Mat::Zero(dim, dim);
    for (int r = 0; r < dim; ++r) {
        int ra = (r >> ba) & 1, rb = (r >> bb) & 1;
        int rrest = r & ~(1 << ba) & ~(1 << bb);
        int urow = ra * 2 + rb;
        for (int ucol = 0; ucol < 4; ++ucol) {
            int ca = ucol >> 1, cb = ucol & 1;
            int c = rrest | (ca << ba) | (cb << bb);
            out(r, c) += u(urow, ucol);
        }
    }
    return out;
}

Mat partial_trace(const Mat& rho, int pos, int n) {
    int bit = n - 1 - pos;
    int dim = 1 << n, half = dim >> 1;
    Mat out = Mat::Zero(half, half);
    auto embed = [&](int compact, int b) {
        int low = compact & ((1 << bit) - 1);
        int high = compact >> bit;
        return (high << (bit + 1)) | (b << bit) | low;
    };
    for (int r = 0; r < half; ++r)
        for (int c = 0; c < half; ++c)
            for (int b = 0; b < 2; ++b)
                out(r, c) += rho(embed(r, b), embed(c, b));
    return out;
}

// --- backend internals ---------------------------------------------------------

int Backend::add_qubit(double t1, double t2) {
    if (t2 > 2.0 * t1)
        throw SetupError("qubit decoherence times must satisfy T2 <= 2*T1");
    qubits_.push_back(Qubit{t1, t2, -1, 0});
    return static_cast<int>(qubits_.size()) - 1;
}

int Backend::pos_in_group(const Group& g, int q) const {
    for (size_t i = 0; i < g.members.size(); ++i)
        if (g.members[i] == q) return static_cast<int>(i);
    throw InternalError("qubit not in its own group");
}

Backend::Group& Backend::group_of(int q) { return groups_.at(qubits_.at(q).group); }
const Backend::Group& Backend::group_of(int q) const {
    return groups_.at(qubits_.at(q).group);
}

int Backend::new_group(int q, const Mat& rho) {
    int id = next_group_++;
    groups_[id] = Group{{q}, rho};
    qubits_[q].group = id;
    return id;
}

void Backend::apply_decoherence(Mat& rho, int pos, int n, double dt, double t1,
                                double t2) {
    if (dt <= 0) return;
    double gamma = (t1 == kInf) ? 0.0 : 1.0 - std::exp(-dt / t1);
    // Residual off-diagonal factor after amplitude damping is exp(-dt/2T1);
    // top up with a phase-flip channel so the total is exp(-dt/T2).
    double lam = 1.0;
    if (t2 != kInf) {
        double half_t1 = (t1 == kInf) ? 0.0 : dt / (2.0 * t1);
        lam = std::exp(-dt / t2 + half_t1);
    }
    if (gamma == 0.0 && lam == 1.0) return;

    Mat2 k0, k1;
    k0 << 1, 0, 0, std::sqrt(1.0 - gamma);
    k1 << 0, std::sqrt(gamma), 0, 0;
    Mat K0 = lift_1q(k0, pos, n), K1 = lift_1q(k1, pos, n);
    rho = K0 * rho * K0.adjoint() + K1 * rho * K1.adjoint();

    double q = (1.0 - lam) / 2.0;
    if (q > 0) {
        Mat Zf = lift_1q(pauli_z(), pos, n);
        rho = (1.0 - q) * rho + q * Zf * rho * Zf.adjoint();
    }
}

void Backend::elapse(int q, time_ns now) {
    Qubit& qb = qubits_.at(q);
    if (qb.group < 0) {
        qb.last = now;
        return;
    }
    double dt = static_cast<double>(now - qb.last);
    if (dt < 0) throw InternalError("time went backwards in qsim");
    Group& g = groups_.at(qb.group);
    apply_decoherence(g.rho, pos_in_group(g, q), static_cast<int>(g.members.size()),
                      dt, qb.t1, qb.t2);
    qb.last = now;
}

void Backend::trace_out(int q, time_ns now) {
    Qubit& qb = qubits_.at(q);
    if (qb.group < 0) return;
    elapse(q, now);
    Group& g = groups_.at(qb.group);
    if (g.members.size() == 1) {
        groups_.erase(qb.group);
    } else {
        int pos = pos_in_group(g, q);
        g.rho = partial_trace(g.rho, pos, static_cast<int>(g.members.size()));
        g.members.erase(g.members.begin() + pos);
    }
    qb.group = -1;
}

void Backend::split_off(int q, const Mat2& pure) {
    Qubit& qb = qubits_.at(q);
    Group& g = groups_.at(qb.group);
    if (g.members.size() == 1) {
        g.rho = pure;
        return;
    }
    int pos = pos_in_group(g, q);
    g.rho = partial_trace(g.rho, pos, static_cast<int>(g.members.size()));
    g.members.erase(g.members.begin() + pos);
    qb.group = -1;
    new_group(q, pure);
}

int Backend::merge(int qa, int qb, time_ns now) {
    int ga = qubits_.at(qa).group, gb = qubits_.at(qb).group;
    if (ga == gb) return ga;
    Group& a = groups_.at(ga);
    Group& b = groups_.at(gb);
    if (a.members.size() + b.members.size() > static_cast<size_t>(cap_))
        throw SetupError("entangled group would exceed the configured size cap");
    // Settle pending decoherence before the joint product is formed; the
    // timestamps stay per-qubit afterwards.
    for (int q : a.members) elapse(q, now);
    for (int q : b.members) elapse(q, now);
    Mat joint = Mat::Zero(a.rho.rows() * b.rho.rows(), a.rho.cols() * b.rho.cols());
    for (int i = 0; i < a.rho.rows(); ++i)
        for (int j = 0; j < a.rho.cols(); ++j)
            joint.block(i * b.rho.rows(), j * b.rho.cols(), b.rho.rows(), b.rho.cols()) =
                a.rho(i, j) * b.rho;
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    a.rho = std::move(joint);
    for (int q : a.members) qubits_[q].group = ga;
    groups_.erase(gb);
    return ga;
}

void Backend::reset(int q, time_ns now) {
    trace_out(q, now);
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = 1;
    new_group(q, rho);
    qubits_[q].last = now;
}

void Backend::discard(int q, time_ns now) {
    trace_out(q, now);
    qubits_[q].last = now;
}

void Backend::depolarize(int q, double p) {
    if (p <= 0) return;
    Group& g = group_of(q);
    int n = static_cast<int>(g.members.size());
    int pos = pos_in_group(g, q);
    Mat X = lift_1q(pauli_x(), pos, n), Y = lift_1q(pauli_y(), pos, n),
        Z = lift_1q(pauli_z(), pos, n);
    g.rho = (1.0 - p) * g.rho +
            (p / 3.0) * (X * g.rho * X.adjoint() + Y * g.rho * Y.adjoint() +
                         Z * g.rho * Z.adjoint());
}

void Backend::apply_1q(int q, const Mat2& u, time_ns now, double depolar) {
    if (!is_active(q)) throw InternalError("gate on blank qubit");
    elapse(q, now);
    Group& g = group_of(q);
    Mat U = lift_1q(u, pos_in_group(g, q), static_cast<int>(g.members.size()));
    g.rho = U * g.rho * U.adjoint();
    depolarize(q, depolar);
}

void Backend::apply_2q(int qa, int qb, const Mat4& u, time_ns now, double depolar) {
    if (!is_active(qa) || !is_active(qb))
        throw InternalError("two-qubit gate on blank qubit");
    if (qa == qb) throw InternalError("two-qubit gate needs distinct qubits");
    elapse(qa, now);
    elapse(qb, now);
    merge(qa, qb, now);
    Group& g = group_of(qa);
    int n = static_cast<int>(g.members.size());
    Mat U = lift_2q(u, pos_in_group(g, qa), pos_in_group(g, qb), n);
    g.rho = U * g.rho * U.adjoint();
    depolarize(qa, depolar);
    depolarize(qb, depolar);
}

void Backend::apply_xx_all(const std::vector<int>& qs, double theta, time_ns now,
                           double depolar) {
    if (qs.size() < 2) throw InternalError("xx_all needs at least two qubits");
    for (int q : qs)
        if (!is_active(q)) throw InternalError("xx_all on blank qubit");
    for (int q : qs) elapse(q, now);
    for (size_t i = 1; i < qs.size(); ++i) merge(qs[0], qs[i], now);
    Group& g = group_of(qs[0]);
    int n = static_cast<int>(g.members.size());
    Mat S = Mat::Zero(1 << n, 1 << n);
    for (size_t i = 0; i < qs.size(); ++i)
        for (size_t j = i + 1; j < qs.size(); ++j) {
            Mat xi = lift_1q(pauli_x(), pos_in_group(g, qs[i]), n);
            Mat xj = lift_1q(pauli_x(), pos_in_group(g, qs[j]), n);
            S += xi * xj;
        }
    // U = exp(-i*theta/2 * S) via the spectral decomposition of Hermitian S.
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    Mat D = Mat::Zero(S.rows(), S.cols());
    for (int i = 0; i < S.rows(); ++i)
        D(i, i) = std::exp(cplx(0, -theta / 2.0 * es.eigenvalues()(i)));
    Mat U = es.eigenvectors() * D * es.eigenvectors().adjoint();
    g.rho = U * g.rho * U.adjoint();
    for (int q : qs) depolarize(q, depolar);
}

int Backend::measure(int q, Basis b, time_ns now, Rng& rng) {
    if (!is_active(q)) throw InternalError("measurement of blank qubit");
    elapse(q, now);
    Mat2 obs;
    switch (b) {
    case Basis::Z: obs = pauli_z(); break;
    case Basis::X: obs = pauli_x(); break;
    case Basis::Y: obs = pauli_y(); break;
    }
    Group& g = group_of(q);
    int n = static_cast<int>(g.members.size());
    int pos = pos_in_group(g, q);
    Mat2 p0 = (Mat2::Identity() + obs) / 2.0; // bit 0 <-> +1 eigenstate
    Mat P0 = lift_1q(p0, pos, n);
    double prob0 = (P0 * g.rho).trace().real();
    int bit;
    if (rng.uniform() < prob0) {
        bit = 0;
        g.rho = (P0 * g.rho * P0.adjoint()) / prob0;
    } else {
        bit = 1;
        Mat2 p1 = (Mat2::Identity() - obs) / 2.0;
        Mat P1 = lift_1q(p1, pos, n);
        g.rho = (P1 * g.rho * P1.adjoint()) / (1.0 - prob0);
    }
    split_off(q, bit == 0 ? p0 : Mat2((Mat2::Identity() - obs) / 2.0));
    return bit;
}

void Backend::create_werner_pair(int qa, int qb, double fidelity, time_ns now) {
    if (is_active(qa) || is_active(qb))
        throw InternalError("werner pair requires blank qubits");
    if (qa == qb) throw InternalError("werner pair needs distinct qubits");
    Mat phi = Mat::Zero(4, 1);
    phi(0, 0) = phi(3, 0) = 1.0 / std::sqrt(2.0);
    Mat proj = phi * phi.adjoint();
    Mat rho = fidelity * proj + (1.0 - fidelity) / 3.0 * (Mat::Identity(4, 4) - proj);
    int id = next_group_++;
    groups_[id] = Group{{qa, qb}, rho};
    qubits_[qa].group = id;
    qubits_[qb].group = id;
    qubits_[qa].last = now;
    qubits_[qb].last = now;
}

Mat Backend::peek_group(int q, time_ns now) const {
    const Group& g = group_of(q);
    Mat rho = g.rho;
    int n = static_cast<int>(g.members.size());
    for (int i = 0; i < n; ++i) {
        const Qubit& qb = qubits_.at(g.members[i]);
        apply_decoherence(rho, i, n, static_cast<double>(now - qb.last), qb.t1, qb.t2);
    }
    return rho;
}

std::vector<int> Backend::group_members(int q) const { return group_of(q).members; }

void Backend::check_invariants(double tol) const {
    for (const auto& [id, g] : groups_) {
        (void)id;
        double tr_err = std::abs(g.rho.trace().real() - 1.0) +
                        std::abs(g.rho.trace().imag());
        if (tr_err > tol) throw InternalError("state trace deviates from 1");
        double herm = (g.rho - g.rho.adjoint()).cwiseAbs().maxCoeff();
        if (herm > tol) throw InternalError("state is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Mat> es((g.rho + g.rho.adjoint()) / 2.0);
        if (es.eigenvalues().minCoeff() < -tol)
            throw InternalError("state has a negative eigenvalue");
    }
}

} // namespace qnsim::qsim
