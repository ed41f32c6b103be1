#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dataseal/adversary.hpp"
#include "dataseal/demo_cnn.hpp"
#include "dataseal/pipeline.hpp"

namespace py = pybind11;
namespace ds = dataseal;

namespace {

ds::Matrix matrix_from_rows(const std::vector<std::vector<std::uint64_t>>& rows, const ds::Modulus& mod) {
  if (rows.empty()) throw ds::Error(ds::Errc::DimensionMismatch, "matrix needs at least one row");
  const std::size_t cols = rows[0].size();
  std::vector<ds::RingScalar> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ds::Error(ds::Errc::DimensionMismatch, "ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return ds::Matrix(rows.size(), cols, mod, std::move(data));
}

std::vector<std::vector<std::uint64_t>> matrix_to_rows(const ds::Matrix& m) {
  std::vector<std::vector<std::uint64_t>> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

ds::ClientSecret secret_or_random(const std::optional<std::string>& hex) {
  return hex ? ds::ClientSecret::from_hex(*hex) : ds::ClientSecret::random();
}

ds::Scheme scheme_from(const std::string& s) {
  if (s == "dataseal") return ds::Scheme::DataSeal;
  if (s == "abft") return ds::Scheme::AbftBaseline;
  throw ds::Error(ds::Errc::InvalidParams, "scheme must be 'dataseal' or 'abft'");
}

py::tuple run_job(const std::string& op_name, const ds::Matrix& a, const std::optional<ds::Matrix>& b,
                  std::uint32_t exponent, const std::optional<std::string>& tamper, const std::string& scheme,
                  const std::optional<std::string>& secret_hex, std::size_t slot_count, std::uint64_t seed) {
  ds::SessionConfig cfg;
  cfg.params.modulus = a.modulus();
  cfg.params.slot_count = slot_count;
  cfg.scheme = scheme_from(scheme);
  ds::ClientSession session(secret_or_random(secret_hex), cfg);
  const ds::BackendContext server(cfg.params);
  ds::InProcessTransport wire(server);
  ds::AdversarialTransport adv(wire, tamper ? ds::parse_strategy(*tamper) : ds::TamperStrategy{ds::Passthrough{}},
                               cfg.scheme, seed);
  adv.set_logical_cols(b ? b->cols() : a.cols());
  session.handshake(adv);
  const ds::JobOutcome out = session.run(ds::JobRequest{ds::parse_op(op_name), a, b, exponent}, adv);
  return py::make_tuple(out.result, out.verdict);
}

py::dict demo_cnn(std::uint64_t seed, std::size_t tamper_layer, bool overlap) {
  const auto demo = ds::DemoCnnSpec::build(seed);
  ds::SessionConfig cfg;
  cfg.params = ds::demo_backend_params();
  ds::ClientSession session(ds::ClientSecret::random(), cfg);
  const ds::BackendContext server(cfg.params);
  ds::InProcessTransport wire(server);
  ds::AdversarialTransport adv(wire, tamper_layer ? ds::TamperStrategy{ds::ElementEdit{0, 0, 1}} : ds::Passthrough{},
                               ds::Scheme::DataSeal, seed);
  if (tamper_layer) adv.set_target(tamper_layer);
  adv.set_logical_cols(36);
  session.handshake(adv);
  const auto res = ds::run_pipeline(session, demo.pipeline, demo.input, adv, {overlap});
  py::dict d;
  d["verdicts"] = res.verdicts;
  d["logits"] = ds::decode_signed_values(res.output);
  d["matches_reference"] = res.output == ds::reference_forward(demo.pipeline, demo.input);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keyed checksum verification for outsourced homomorphic matrix computation";

  // leaked on purpose: the translator may run until interpreter shutdown
  static PyObject* error_type = PyErr_NewException("dataseal._core.DataSealError", PyExc_RuntimeError, nullptr);
  static PyObject* rejected_type = PyErr_NewException("dataseal._core.LayerRejected", error_type, nullptr);
  m.attr("DataSealError") = py::handle(error_type);
  m.attr("LayerRejected") = py::handle(rejected_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ds::LayerRejected& e) {
      py::object exc = py::handle(rejected_type)(e.what());
      exc.attr("layer") = e.layer();
      exc.attr("code") = static_cast<int>(e.code());
      exc.attr("code_name") = std::string(ds::errc_name(e.code()));
      PyErr_SetObject(rejected_type, exc.ptr());
    } catch (const ds::Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = static_cast<int>(e.code());
      exc.attr("code_name") = std::string(ds::errc_name(e.code()));
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<ds::Modulus>(m, "Modulus")
      .def(py::init<std::uint64_t>(), py::arg("m") = ds::kDefaultModulus)
      .def_static("toy", &ds::Modulus::toy, py::arg("m"))
      .def_property_readonly("value", &ds::Modulus::value)
      .def("encode_signed", &ds::Modulus::encode_signed)
      .def("decode_signed", &ds::Modulus::decode_signed)
      .def("__eq__", [](const ds::Modulus& a, const ds::Modulus& b) { return a == b; })
      .def("__repr__", [](const ds::Modulus& x) { return "Modulus(" + std::to_string(x.value()) + ")"; });

  py::class_<ds::Matrix>(m, "Matrix")
      .def(py::init(&matrix_from_rows), py::arg("rows"), py::arg("modulus"))
      .def_property_readonly("rows", &ds::Matrix::rows)
      .def_property_readonly("cols", &ds::Matrix::cols)
      .def_property_readonly("modulus", &ds::Matrix::modulus)
      .def("to_list", &matrix_to_rows)
      .def("__getitem__",
           [](const ds::Matrix& x, std::pair<std::size_t, std::size_t> rc) { return x.at(rc.first, rc.second); })
      .def("__eq__", [](const ds::Matrix& a, const ds::Matrix& b) { return a == b; })
      .def("__repr__", [](const ds::Matrix& x) {
        return "Matrix(" + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ")";
      });

  m.def("mat_mul", &ds::mat_mul);
  m.def("mat_add", &ds::mat_add);
  m.def("mat_pow_elementwise", &ds::mat_pow_elementwise);

  py::class_<ds::Verdict>(m, "Verdict")
      .def_readonly("accepted", &ds::Verdict::accepted)
      .def_property_readonly("failed",
                             [](const ds::Verdict& v) {
                               std::vector<std::string> out;
                               for (auto c : v.failed) out.emplace_back(ds::check_name(c));
                               return out;
                             })
      .def_readonly("checksum_column", &ds::Verdict::checksum_column)
      .def_readonly("golden_column", &ds::Verdict::golden_column)
      .def("summary", &ds::Verdict::summary)
      .def("__repr__", [](const ds::Verdict& v) { return "Verdict(" + v.summary() + ")"; });

  py::class_<ds::VerificationKey>(m, "VerificationKey")
      .def_static(
          "make",
          [](const std::vector<std::uint64_t>& weights, std::uint64_t alpha, const ds::Modulus& mod) {
            return ds::VerificationKey::make(ds::Matrix::row_vector(mod, weights), alpha);
          },
          py::arg("weights"), py::arg("alpha"), py::arg("modulus"))
      .def_property_readonly("weights",
                             [](const ds::VerificationKey& k) {
                               return std::vector<std::uint64_t>(k.weights().data().begin(), k.weights().data().end());
                             })
      .def_property_readonly("alpha", &ds::VerificationKey::alpha);

  m.def(
      "derive_keys",
      [](const std::string& secret_hex, std::uint64_t nonce_prefix, std::uint64_t counter, const std::string& op,
         std::size_t length, const ds::Modulus& mod) {
        return ds::derive_keys(ds::ClientSecret::from_hex(secret_hex),
                               ds::SessionNonce::from_counter(nonce_prefix, counter), ds::parse_op(op), length, mod);
      },
      py::arg("secret_hex"), py::arg("nonce_prefix"), py::arg("counter"), py::arg("op"), py::arg("length"),
      py::arg("modulus"));

  m.def(
      "encode_mul",
      [](const ds::Matrix& a, const ds::Matrix& b, const ds::VerificationKey& k) {
        auto e = ds::encode_mul(a, b, k);
        return py::make_tuple(e.left.payload, e.golden.v_o);
      },
      "Returns (encoded A, golden output row).");
  m.def("verify_mul", [](const ds::Matrix& c_star, const ds::VerificationKey& k, const ds::Matrix& v_o) {
    return ds::verify_mul(c_star, k, ds::GoldenOutput{v_o});
  });
  m.def("encode_add", [](const ds::Matrix& a, const ds::Matrix& b, const ds::VerificationKey& k) {
    auto e = ds::encode_add(a, b, k);
    return py::make_tuple(e.left.payload, e.right.payload, e.golden.v_o);
  });
  m.def("verify_add", [](const ds::Matrix& c_star, const ds::VerificationKey& k, const ds::Matrix& v_o) {
    return ds::verify_add(c_star, k, ds::GoldenOutput{v_o});
  });
  m.def(
      "encode_poly",
      [](const ds::Matrix& a, std::uint64_t n, const ds::VerificationKey& k, bool allow_zero) {
        auto e = ds::encode_poly(a, n, k, ds::PolyOptions{allow_zero});
        return py::make_tuple(e.left.payload, e.golden.v_o);
      },
      py::arg("a"), py::arg("n"), py::arg("key"), py::arg("allow_zero_entries") = false);
  m.def("verify_poly", [](const ds::Matrix& c_star, std::uint64_t n, const ds::VerificationKey& k,
                          const ds::Matrix& v_o) { return ds::verify_poly(c_star, n, k, ds::GoldenOutput{v_o}); });

  m.def("run_job", &run_job, py::arg("op"), py::arg("a"), py::arg("b") = std::nullopt, py::arg("exponent") = 0,
        py::arg("tamper") = std::nullopt, py::arg("scheme") = "dataseal", py::arg("secret_hex") = std::nullopt,
        py::arg("slot_count") = ds::kDefaultSlotCount, py::arg("seed") = 1,
        "Runs one job through an in-process server; returns (C, Verdict).");

  m.def(
      "run_campaign",
      [](const std::vector<std::string>& strategies, const std::vector<std::string>& ops,
         const std::vector<std::size_t>& sizes, std::size_t trials, const std::vector<std::string>& schemes,
         std::uint64_t seed, std::uint64_t modulus) {
        ds::CampaignConfig cfg;
        cfg.strategies.clear();
        for (const auto& s : strategies) cfg.strategies.push_back(ds::parse_strategy(s));
        cfg.ops.clear();
        for (const auto& o : ops) cfg.ops.push_back(ds::parse_op(o));
        cfg.sizes = sizes;
        cfg.trials = trials;
        cfg.schemes.clear();
        for (const auto& s : schemes) cfg.schemes.push_back(scheme_from(s));
        cfg.seed = seed;
        cfg.modulus = ds::Modulus(modulus);
        py::list rows;
        for (const auto& st : ds::run_campaign(cfg)) {
          py::dict d;
          d["scheme"] = std::string(ds::scheme_name(st.scheme));
          d["strategy"] = st.strategy;
          d["op"] = std::string(ds::op_name(st.op));
          d["size"] = st.size;
          d["trials"] = st.trials;
          d["detections"] = st.detections;
          d["false_accepts"] = st.false_accepts;
          rows.append(d);
        }
        return rows;
      },
      py::arg("strategies"), py::arg("ops") = std::vector<std::string>{"mul", "add", "poly"},
      py::arg("sizes") = std::vector<std::size_t>{2, 4}, py::arg("trials") = 50,
      py::arg("schemes") = std::vector<std::string>{"dataseal"}, py::arg("seed") = 1,
      py::arg("modulus") = ds::kDefaultModulus);

  m.def(
      "forgery_game",
      [](const ds::Modulus& mod, std::size_t cols, std::size_t trials, std::uint64_t seed, bool with_key) {
        ds::ForgeryConfig cfg;
        cfg.modulus = mod;
        cfg.cols = cols;
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.adversary_has_key = with_key;
        return ds::forgery_game(cfg).win_rate();
      },
      py::arg("modulus"), py::arg("cols"), py::arg("trials") = 10000, py::arg("seed") = 1,
      py::arg("adversary_has_key") = false, "Empirical win rate of the forging adversary.");

  m.def("demo_cnn", &demo_cnn, py::arg("seed") = 1, py::arg("tamper_layer") = 0, py::arg("overlap") = false);
}
