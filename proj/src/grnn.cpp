#include "gridfc/grnn.hpp"

#include <cmath>
#include <utility>

#include <json.hpp>

#include "gridfc/errors.hpp"
#include "gridfc/rng.hpp"

namespace gridfc {

namespace {

void check_dims(const GrqnDims& d) {
    if (d.n <= 0 || d.f <= 0 || d.h <= 0 || d.g <= 0 || d.k <= 0 || d.d <= 0 ||
        d.num_actions <= 0) {
        throw ShapeError("network dimensions must all be positive");
    }
}

/// Filter with a possibly-null shift; null means the zero adjacency, whose
/// only surviving tap is the identity one.
Eigen::MatrixXd filter_on(const std::shared_ptr<const ShiftOperator>& shift,
                          const Eigen::MatrixXd& x, const std::vector<Eigen::MatrixXd>& coeffs) {
    if (shift) return graph_filter(*shift, x, coeffs);
    return x * coeffs[0];
}

Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& y) {
    Eigen::VectorXd v(y.size());
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.cols(); ++j) v(idx++) = y(i, j);
    }
    return v;
}

Eigen::MatrixXd unvec_rowmajor(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd y(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) y(i, j) = v(idx++);
    }
    return y;
}

}  // namespace

GrqnParams GrqnParams::zeros(const GrqnDims& dims) {
    check_dims(dims);
    GrqnParams p;
    p.dims = dims;
    for (int k = 0; k < dims.k; ++k) {
        p.h1.push_back(Eigen::MatrixXd::Zero(dims.f, dims.h));
        p.h2.push_back(Eigen::MatrixXd::Zero(dims.h, dims.h));
        p.h3.push_back(Eigen::MatrixXd::Zero(dims.h, dims.g));
    }
    p.b_z = Eigen::VectorXd::Zero(dims.h);
    p.b_y = Eigen::VectorXd::Zero(dims.g);
    p.w_hid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims.n) * dims.g, dims.d);
    p.b_hid = Eigen::VectorXd::Zero(dims.d);
    p.w_out = Eigen::MatrixXd::Zero(dims.d, dims.num_actions);
    p.b_out = Eigen::VectorXd::Zero(dims.num_actions);
    return p;
}

GrqnParams GrqnParams::init(const GrqnDims& dims, std::mt19937_64& rng) {
    GrqnParams p = zeros(dims);
    auto views = p.flat_views();
    // Per-view fan-in, in flat_views order: the input width feeding the tensor.
    std::vector<double> fan;
    for (int k = 0; k < dims.k; ++k) fan.push_back(dims.f);       // h1
    for (int k = 0; k < dims.k; ++k) fan.push_back(dims.h);       // h2
    for (int k = 0; k < dims.k; ++k) fan.push_back(dims.h);       // h3
    fan.push_back(dims.f + dims.h);                               // b_z
    fan.push_back(dims.h);                                        // b_y
    fan.push_back(static_cast<double>(dims.n) * dims.g);          // w_hid
    fan.push_back(static_cast<double>(dims.n) * dims.g);          // b_hid
    fan.push_back(dims.d);                                        // w_out
    fan.push_back(dims.d);                                        // b_out
    for (size_t t = 0; t < views.size(); ++t) {
        const double a = 1.0 / std::sqrt(fan[t]);
        for (Eigen::Index i = 0; i < views[t].size(); ++i) views[t](i) = uniform_sym(rng, a);
    }
    return p;
}

std::vector<Eigen::Map<Eigen::VectorXd>> GrqnParams::flat_views() {
    std::vector<Eigen::Map<Eigen::VectorXd>> out;
    auto add = [&out](Eigen::MatrixXd& m) { out.emplace_back(m.data(), m.size()); };
    auto addv = [&out](Eigen::VectorXd& v) { out.emplace_back(v.data(), v.size()); };
    for (auto& m : h1) add(m);
    for (auto& m : h2) add(m);
    for (auto& m : h3) add(m);
    addv(b_z);
    addv(b_y);
    add(w_hid);
    addv(b_hid);
    add(w_out);
    addv(b_out);
    return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> GrqnParams::flat_views() const {
    std::vector<Eigen::Map<const Eigen::VectorXd>> out;
    auto add = [&out](const Eigen::MatrixXd& m) { out.emplace_back(m.data(), m.size()); };
    auto addv = [&out](const Eigen::VectorXd& v) { out.emplace_back(v.data(), v.size()); };
    for (const auto& m : h1) add(m);
    for (const auto& m : h2) add(m);
    for (const auto& m : h3) add(m);
    addv(b_z);
    addv(b_y);
    add(w_hid);
    addv(b_hid);
    add(w_out);
    addv(b_out);
    return out;
}

std::vector<std::string> GrqnParams::tensor_names() const {
    std::vector<std::string> names;
    for (int k = 0; k < dims.k; ++k) names.push_back("h1_" + std::to_string(k));
    for (int k = 0; k < dims.k; ++k) names.push_back("h2_" + std::to_string(k));
    for (int k = 0; k < dims.k; ++k) names.push_back("h3_" + std::to_string(k));
    names.insert(names.end(), {"b_z", "b_y", "w_hid", "b_hid", "w_out", "b_out"});
    return names;
}

std::size_t GrqnParams::parameter_count() const {
    std::size_t c = 0;
    for (const auto& v : flat_views()) c += static_cast<std::size_t>(v.size());
    return c;
}

std::string GrqnParams::to_json() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["dims"] = {{"n", dims.n},           {"f", dims.f}, {"h", dims.h}, {"g", dims.g},
                 {"k", dims.k},           {"d", dims.d}, {"num_actions", dims.num_actions}};
    const auto names = tensor_names();
    const auto views = flat_views();
    for (size_t t = 0; t < names.size(); ++t) {
        auto& arr = j["tensors"][names[t]] = nlohmann::json::array();
        for (Eigen::Index i = 0; i < views[t].size(); ++i) arr.push_back(views[t](i));
    }
    return j.dump();
}

GrqnParams GrqnParams::from_json(const std::string& text) {
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        if (j.at("format_version").get<int>() != 1) {
            throw ParseError("unsupported checkpoint format version");
        }
        GrqnDims dims;
        const auto& jd = j.at("dims");
        dims.n = jd.at("n").get<int>();
        dims.f = jd.at("f").get<int>();
        dims.h = jd.at("h").get<int>();
        dims.g = jd.at("g").get<int>();
        dims.k = jd.at("k").get<int>();
        dims.d = jd.at("d").get<int>();
        dims.num_actions = jd.at("num_actions").get<int>();
        GrqnParams p = zeros(dims);
        const auto names = p.tensor_names();
        auto views = p.flat_views();
        for (size_t t = 0; t < names.size(); ++t) {
            const auto arr = j.at("tensors").at(names[t]).get<std::vector<double>>();
            if (static_cast<Eigen::Index>(arr.size()) != views[t].size()) {
                throw ShapeError("checkpoint tensor " + names[t] + " has wrong size");
            }
            for (Eigen::Index i = 0; i < views[t].size(); ++i) views[t](i) = arr[static_cast<size_t>(i)];
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
}

LatentState LatentState::zero(int n, int h) {
    return LatentState{Eigen::MatrixXd::Zero(n, h), nullptr};
}

LatentState grnn_step(const GraphObs& obs, const LatentState& prev, const GrqnParams& params) {
    if (obs.x.rows() != params.dims.n || obs.x.cols() != params.dims.f) {
        throw ShapeError("observation node state disagrees with network dims");
    }
    if (prev.z.rows() != params.dims.n || prev.z.cols() != params.dims.h) {
        throw ShapeError("latent state disagrees with network dims");
    }
    Eigen::MatrixXd a = graph_filter(*obs.shift, obs.x, params.h1);
    a.noalias() += filter_on(prev.shift, prev.z, params.h2);
    a.rowwise() += params.b_z.transpose();
    return LatentState{a.array().tanh().matrix(), obs.shift};
}

Eigen::MatrixXd grnn_output(const LatentState& latent, const GrqnParams& params) {
    if (latent.z.rows() != params.dims.n || latent.z.cols() != params.dims.h) {
        throw ShapeError("latent state disagrees with network dims");
    }
    Eigen::MatrixXd a = filter_on(latent.shift, latent.z, params.h3);
    a.rowwise() += params.b_y.transpose();
    return a.array().tanh().matrix();
}

Eigen::VectorXd q_head(const Eigen::MatrixXd& y, const GrqnParams& params) {
    if (y.rows() != params.dims.n || y.cols() != params.dims.g) {
        throw ShapeError("output map disagrees with network dims");
    }
    const Eigen::VectorXd v = vec_rowmajor(y);
    const Eigen::VectorXd h = (params.w_hid.transpose() * v + params.b_hid).cwiseMax(0.0);
    return params.w_out.transpose() * h + params.b_out;
}

SequenceResult forward_sequence(const std::vector<GraphObs>& observations,
                                const LatentState& z0, const GrqnParams& params) {
    if (observations.empty()) throw ShapeError("observation sequence is empty");
    const auto& d = params.dims;
    SequenceResult res;
    res.tape.stages.reserve(observations.size());
    LatentState latent = z0;
    for (const auto& obs : observations) {
        if (obs.x.rows() != d.n || obs.x.cols() != d.f) {
            throw ShapeError("observation node state disagrees with network dims");
        }
        StageTape st;
        st.obs = obs;
        st.prev_shift = latent.shift;

        st.s1.resize(static_cast<size_t>(d.k));
        st.s1[0] = obs.x;
        for (int k = 1; k < d.k; ++k) obs.shift->apply(st.s1[static_cast<size_t>(k) - 1], st.s1[static_cast<size_t>(k)]);

        st.s2.resize(static_cast<size_t>(d.k));
        st.s2[0] = latent.z;
        for (int k = 1; k < d.k; ++k) {
            if (st.prev_shift) {
                st.prev_shift->apply(st.s2[static_cast<size_t>(k) - 1], st.s2[static_cast<size_t>(k)]);
            } else {
                st.s2[static_cast<size_t>(k)] = Eigen::MatrixXd::Zero(d.n, d.h);
            }
        }

        Eigen::MatrixXd a = st.s1[0] * params.h1[0];
        for (int k = 1; k < d.k; ++k) a.noalias() += st.s1[static_cast<size_t>(k)] * params.h1[static_cast<size_t>(k)];
        for (int k = 0; k < d.k; ++k) a.noalias() += st.s2[static_cast<size_t>(k)] * params.h2[static_cast<size_t>(k)];
        a.rowwise() += params.b_z.transpose();
        st.z = a.array().tanh().matrix();

        st.s3.resize(static_cast<size_t>(d.k));
        st.s3[0] = st.z;
        for (int k = 1; k < d.k; ++k) obs.shift->apply(st.s3[static_cast<size_t>(k) - 1], st.s3[static_cast<size_t>(k)]);
        Eigen::MatrixXd ay = st.s3[0] * params.h3[0];
        for (int k = 1; k < d.k; ++k) ay.noalias() += st.s3[static_cast<size_t>(k)] * params.h3[static_cast<size_t>(k)];
        ay.rowwise() += params.b_y.transpose();
        st.y = ay.array().tanh().matrix();

        st.v = vec_rowmajor(st.y);
        st.h_pre = params.w_hid.transpose() * st.v + params.b_hid;
        st.h = st.h_pre.cwiseMax(0.0);
        st.q = params.w_out.transpose() * st.h + params.b_out;

        latent = LatentState{st.z, obs.shift};
        res.q.push_back(st.q);
        res.y.push_back(st.y);
        res.tape.stages.push_back(std::move(st));
    }
    res.final_latent = latent;
    return res;
}

std::vector<Eigen::VectorXd> forward_q_only(const std::vector<GraphObs>& observations,
                                            const LatentState& z0, const GrqnParams& params) {
    if (observations.empty()) throw ShapeError("observation sequence is empty");
    const auto& d = params.dims;
    std::vector<Eigen::VectorXd> qs;
    qs.reserve(observations.size());
    LatentState latent = z0;
    Eigen::MatrixXd chain, shifted;
    for (const auto& obs : observations) {
        if (obs.x.rows() != d.n || obs.x.cols() != d.f) {
            throw ShapeError("observation node state disagrees with network dims");
        }
        Eigen::MatrixXd a = obs.x * params.h1[0];
        chain = obs.x;
        for (int k = 1; k < d.k; ++k) {
            obs.shift->apply(chain, shifted);
            chain.swap(shifted);
            a.noalias() += chain * params.h1[static_cast<size_t>(k)];
        }
        a.noalias() += latent.z * params.h2[0];
        if (latent.shift) {
            chain = latent.z;
            for (int k = 1; k < d.k; ++k) {
                latent.shift->apply(chain, shifted);
                chain.swap(shifted);
                a.noalias() += chain * params.h2[static_cast<size_t>(k)];
            }
        }
        a.rowwise() += params.b_z.transpose();
        Eigen::MatrixXd z = a.array().tanh().matrix();

        Eigen::MatrixXd ay = z * params.h3[0];
        chain = z;
        for (int k = 1; k < d.k; ++k) {
            obs.shift->apply(chain, shifted);
            chain.swap(shifted);
            ay.noalias() += chain * params.h3[static_cast<size_t>(k)];
        }
        ay.rowwise() += params.b_y.transpose();
        const Eigen::MatrixXd y = ay.array().tanh().matrix();

        const Eigen::VectorXd v = vec_rowmajor(y);
        const Eigen::VectorXd h = (params.w_hid.transpose() * v + params.b_hid).cwiseMax(0.0);
        qs.push_back(params.w_out.transpose() * h + params.b_out);
        latent = LatentState{std::move(z), obs.shift};
    }
    return qs;
}

GrqnParams backward(const ForwardTape& tape, const std::vector<Eigen::VectorXd>& dq,
                    const GrqnParams& params) {
    const auto& d = params.dims;
    if (dq.size() != tape.stages.size()) {
        throw ShapeError("one output gradient per taped stage required");
    }
    GrqnParams grads = GrqnParams::zeros(d);
    Eigen::MatrixXd dz_carry = Eigen::MatrixXd::Zero(d.n, d.h);
    Eigen::MatrixXd tmp;

    for (size_t i = tape.stages.size(); i-- > 0;) {
        const StageTape& st = tape.stages[i];
        if (dq[i].size() != d.num_actions) throw ShapeError("output gradient has wrong length");

        // Value head.
        grads.w_out.noalias() += st.h * dq[i].transpose();
        grads.b_out += dq[i];
        const Eigen::VectorXd dh = params.w_out * dq[i];
        const Eigen::VectorXd dh_pre =
            (st.h_pre.array() > 0.0).select(dh.array(), 0.0).matrix();
        grads.w_hid.noalias() += st.v * dh_pre.transpose();
        grads.b_hid += dh_pre;
        const Eigen::VectorXd dv = params.w_hid * dh_pre;

        // Output map.
        const Eigen::MatrixXd dy = unvec_rowmajor(dv, d.n, d.g);
        const Eigen::MatrixXd day =
            dy.array() * (1.0 - st.y.array() * st.y.array());
        for (int k = 0; k < d.k; ++k) {
            grads.h3[static_cast<size_t>(k)].noalias() += st.s3[static_cast<size_t>(k)].transpose() * day;
        }
        grads.b_y += day.colwise().sum().transpose();
        // dZ from the output filter: Σ_k B^{k−1}·dAy·H3_k^T, Horner on the
        // symmetric shift.
        Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(d.n, d.h);
        for (int k = d.k; k-- > 0;) {
            if (k < d.k - 1) {
                st.obs.shift->apply(dz, tmp);
                dz.swap(tmp);
            }
            dz.noalias() += day * params.h3[static_cast<size_t>(k)].transpose();
        }
        dz += dz_carry;

        // Latent update.
        const Eigen::MatrixXd daz = dz.array() * (1.0 - st.z.array() * st.z.array());
        for (int k = 0; k < d.k; ++k) {
            grads.h1[static_cast<size_t>(k)].noalias() += st.s1[static_cast<size_t>(k)].transpose() * daz;
            grads.h2[static_cast<size_t>(k)].noalias() += st.s2[static_cast<size_t>(k)].transpose() * daz;
        }
        grads.b_z += daz.colwise().sum().transpose();

        // Carry into the previous stage's latent through the recurrence filter.
        if (i > 0) {
            dz_carry.setZero();
            for (int k = d.k; k-- > 0;) {
                if (k < d.k - 1) {
                    if (st.prev_shift) {
                        st.prev_shift->apply(dz_carry, tmp);
                        dz_carry.swap(tmp);
                    } else {
                        dz_carry.setZero();
                    }
                }
                dz_carry.noalias() += daz * params.h2[static_cast<size_t>(k)].transpose();
            }
        }
    }
    return grads;
}

void clip_grad_norm(GrqnParams& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (const auto& v : std::as_const(grads).flat_views()) sq += v.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (auto& v : grads.flat_views()) v *= s;
}

}  // namespace gridfc
