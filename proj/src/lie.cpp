#include "liekit/lie.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "liekit/rng.hpp"

namespace liekit {

bool VectorField::is_zero() const {
  for (const auto& c : comp)
    if (!c.is_zero()) return false;
  return true;
}

bool VectorField::is_polynomial() const {
  for (const auto& c : comp)
    if (!c.is_polynomial()) return false;
  return true;
}

void VectorField::eval(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < comp.size(); ++i) out[i] = comp[i].eval(x);
}

std::string VectorField::str(std::span<const std::string> names) const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < comp.size(); ++i) {
    if (i) os << ", ";
    os << comp[i].str(names);
  }
  os << ")";
  return os.str();
}

VectorField operator+(VectorField a, const VectorField& b) {
  if (a.nvars() != b.nvars()) throw std::invalid_argument("dimension mismatch");
  for (int i = 0; i < a.nvars(); ++i) a.comp[i] += b.comp[i];
  return a;
}

VectorField operator-(VectorField a, const VectorField& b) {
  if (a.nvars() != b.nvars()) throw std::invalid_argument("dimension mismatch");
  for (int i = 0; i < a.nvars(); ++i) a.comp[i] -= b.comp[i];
  return a;
}

VectorField bracket(const VectorField& x, const VectorField& y) {
  const int n = x.nvars();
  if (n != y.nvars()) throw std::invalid_argument("dimension mismatch");
  VectorField out(n);
  for (int i = 0; i < n; ++i) {
    RatFunc acc{Poly(n)};
    for (int j = 0; j < n; ++j) {
      acc += x.comp[j] * y.comp[i].diff(j);
      acc -= y.comp[j] * x.comp[i].diff(j);
    }
    out.comp[i] = std::move(acc);
  }
  return out;
}

namespace {

// Renames the variables of p from n to n*copies, shifting block 0 to block k.
Poly shift_block(const Poly& p, int n, int copies, int k) {
  Poly out(n * copies);
  std::vector<std::int32_t> e(n * copies, 0);
  for (const auto& [exps, c] : p.terms()) {
    std::fill(e.begin(), e.end(), 0);
    for (int i = 0; i < n; ++i) e[k * n + i] = exps[i];
    out += Poly::monomial(e, c);
  }
  return out;
}

}  // namespace

VectorField diagonal_prolongation(const VectorField& x, int copies) {
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  const int n = x.nvars();
  VectorField out(n * copies);
  for (int k = 0; k < copies; ++k) {
    for (int i = 0; i < n; ++i) {
      const RatFunc& c = x.comp[i];
      out.comp[k * n + i] =
          RatFunc(shift_block(c.num(), n, copies, k), shift_block(c.den(), n, copies, k));
    }
  }
  return out;
}

namespace {

// Reduced row echelon form over the rationals.  rows are augmented
// [coefficients | rhs] with `ncols` unknown columns; returns the pivot
// columns.  Exact, so rank decisions cannot be fooled by roundoff.
std::vector<std::size_t> rref(std::vector<std::vector<Rat>>& rows, std::size_t ncols) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t col = 0; col < ncols && r < rows.size(); ++col) {
    std::size_t piv = rows.size();
    for (std::size_t i = r; i < rows.size(); ++i) {
      if (rows[i][col] != 0) {
        piv = i;
        break;
      }
    }
    if (piv == rows.size()) continue;
    std::swap(rows[r], rows[piv]);
    Rat p = rows[r][col];
    for (auto& v : rows[r]) v /= p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][col] == 0) continue;
      Rat f = rows[i][col];
      for (std::size_t cidx = 0; cidx < rows[i].size(); ++cidx)
        rows[i][cidx] -= f * rows[r][cidx];
    }
    pivots.push_back(col);
    ++r;
  }
  return pivots;
}

// Builds the linear system "sum_j c_j basis_j = y" by clearing denominators
// componentwise and matching monomial coefficients.  One row per monomial.
std::vector<std::vector<Rat>> span_system(const VectorField& y,
                                          std::span<const VectorField> basis) {
  const int n = y.nvars();
  const std::size_t k = basis.size();
  std::vector<std::vector<Rat>> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<Poly> p(k);
    for (std::size_t j = 0; j < k; ++j) p[j] = basis[j].comp[i].num();
    Poly q = y.comp[i].num();
    for (std::size_t l = 0; l < k; ++l) {
      const Poly& dl = basis[l].comp[i].den();
      q = q * dl;
      for (std::size_t j = 0; j < k; ++j)
        if (j != l) p[j] = p[j] * dl;
    }
    const Poly& dy = y.comp[i].den();
    for (std::size_t j = 0; j < k; ++j) p[j] = p[j] * dy;

    std::map<std::vector<std::int32_t>, std::size_t> index;
    auto touch = [&](const Poly& poly) {
      for (const auto& [e, c] : poly.terms()) index.emplace(e, index.size());
    };
    for (const auto& poly : p) touch(poly);
    touch(q);

    std::vector<std::vector<Rat>> local(index.size(), std::vector<Rat>(k + 1, Rat(0)));
    for (std::size_t j = 0; j < k; ++j)
      for (const auto& [e, c] : p[j].terms()) local[index[e]][j] = c;
    for (const auto& [e, c] : q.terms()) local[index[e]][k] = c;
    for (auto& row : local) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::optional<std::vector<Rat>> expand_in_basis(const VectorField& y,
                                                std::span<const VectorField> basis) {
  for (const auto& b : basis)
    if (b.nvars() != y.nvars()) throw std::invalid_argument("dimension mismatch");
  const std::size_t k = basis.size();
  if (k == 0) {
    if (y.is_zero()) return std::vector<Rat>{};
    return std::nullopt;
  }
  auto rows = span_system(y, basis);
  auto pivots = rref(rows, k);
  // Inconsistent iff some fully reduced row reads 0 = nonzero.
  for (const auto& row : rows) {
    bool zero_coeffs = true;
    for (std::size_t j = 0; j < k; ++j) zero_coeffs &= (row[j] == 0);
    if (zero_coeffs && row[k] != 0) return std::nullopt;
  }
  std::vector<Rat> out(k, Rat(0));
  for (std::size_t r = 0; r < pivots.size(); ++r) out[pivots[r]] = rows[r][k];
  return out;
}

bool in_span(const VectorField& y, std::span<const VectorField> basis) {
  return expand_in_basis(y, basis).has_value();
}

LieClosureResult lie_closure(std::span<const VectorField> gens, std::size_t cap) {
  if (cap < gens.size()) throw std::invalid_argument("cap below generator count");
  LieClosureResult res;
  auto& basis = res.basis;

  auto admit = [&](const VectorField& z, const std::string& origin) -> bool {
    // Returns false when the cap blocks an independent element.
    if (z.is_zero() || in_span(z, basis)) return true;
    if (basis.size() >= cap) return false;
    basis.push_back(z);
    res.log.push_back(origin + " -> b" + std::to_string(basis.size() - 1));
    return true;
  };

  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (!admit(gens[g], "generator " + std::to_string(g))) {
      res.status = LieClosureResult::Status::ExceededCap;
      res.dimension = basis.size();
      return res;
    }
  }
  // Process bracket pairs in insertion order; appending an element schedules
  // its pairs with everything before it.
  for (std::size_t b = 1; b < basis.size(); ++b) {
    for (std::size_t a = 0; a < b; ++a) {
      VectorField z = bracket(basis[a], basis[b]);
      if (!admit(z, "[b" + std::to_string(a) + ", b" + std::to_string(b) + "]")) {
        res.status = LieClosureResult::Status::ExceededCap;
        res.dimension = basis.size();
        return res;
      }
    }
  }
  res.status = LieClosureResult::Status::Finite;
  res.dimension = basis.size();
  return res;
}

StructureTable StructureTable::zeros(int dim) {
  StructureTable t;
  t.dim = dim;
  t.c.assign(static_cast<std::size_t>(dim) * dim * dim, Rat(0));
  return t;
}

double verify_structure_constants(std::span<const VectorField> fields,
                                  const StructureTable& table) {
  const int r = static_cast<int>(fields.size());
  if (table.dim != r) throw std::invalid_argument("table dimension mismatch");
  Rat worst = 0;
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      VectorField d = bracket(fields[a], fields[b]);
      for (int g = 0; g < r; ++g) {
        const Rat& coef = table.at(a, b, g);
        if (coef != 0) d = d - (coef * fields[g]);
      }
      for (const auto& c : d.comp) {
        Rat m = c.num().max_abs_coeff();  // zero iff the component vanishes
        if (m > worst) worst = m;
      }
    }
  }
  return worst.convert_to<double>();
}

std::optional<StructureTable> structure_constants(std::span<const VectorField> basis) {
  const int r = static_cast<int>(basis.size());
  StructureTable t = StructureTable::zeros(r);
  for (int a = 0; a < r; ++a) {
    for (int b = a + 1; b < r; ++b) {
      auto coeffs = expand_in_basis(bracket(basis[a], basis[b]), basis);
      if (!coeffs) return std::nullopt;
      for (int g = 0; g < r; ++g) {
        t.at(a, b, g) = (*coeffs)[g];
        t.at(b, a, g) = -(*coeffs)[g];
      }
    }
  }
  return t;
}

int minimal_m(std::span<const VectorField> fields, int max_m, int samples,
              std::uint64_t seed) {
  if (fields.empty()) throw std::invalid_argument("no fields");
  if (max_m < 1 || samples < 1) throw std::invalid_argument("bad search bounds");
  const int n = fields[0].nvars();
  for (const auto& f : fields)
    if (f.nvars() != n) throw std::invalid_argument("dimension mismatch");
  const int r = static_cast<int>(fields.size());

  Rng rng(seed);
  for (int m = 1; m <= max_m; ++m) {
    const int dim = n * m;
    int full = 0;
    for (int s = 0; s < samples; ++s) {
      // Draw a generic point: coordinates in [-2,2], pairwise separated, and
      // redrawn when some field has a denominator zero there.
      std::vector<double> pt(dim);
      Eigen::MatrixXd a(r, dim);
      bool ok = false;
      for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
        for (int i = 0; i < dim; ++i) pt[i] = rng.uniform(-2.0, 2.0);
        ok = true;
        for (int i = 0; i < dim && ok; ++i)
          for (int j = i + 1; j < dim && ok; ++j)
            if (std::fabs(pt[i] - pt[j]) < 1e-3) ok = false;
        if (!ok) continue;
        try {
          std::vector<double> val(n);
          for (int f = 0; f < r; ++f) {
            for (int k = 0; k < m; ++k) {
              fields[f].eval(std::span<const double>(pt).subspan(
                                 static_cast<std::size_t>(k) * n, n),
                             val);
              for (int i = 0; i < n; ++i) {
                if (!std::isfinite(val[i])) throw std::domain_error("overflow");
                a(f, k * n + i) = val[i];
              }
            }
          }
        } catch (const std::domain_error&) {
          ok = false;
        }
      }
      if (!ok) throw std::runtime_error("could not sample a generic point");
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
      const auto& sv = svd.singularValues();
      int rank = 0;
      if (sv.size() > 0 && sv(0) > 0.0) {
        for (Eigen::Index i = 0; i < sv.size(); ++i)
          if (sv(i) > 1e-8 * sv(0)) ++rank;
      }
      if (rank == r) ++full;
    }
    if (2 * full > samples) return m;
  }
  throw std::runtime_error("no m up to the bound gives full rank");
}

}  // namespace liekit
