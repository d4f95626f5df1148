#include "steklov/references.hpp"

#include <sstream>

namespace steklov {

namespace {

ReferenceValue ref(int index, double re, double im, const char* row) {
  std::ostringstream cell;
  cell << row << ", lambda_" << index;
  return ReferenceValue{index, Complex(re, im), cell.str()};
}

// Values are transcribed verbatim; "mg" rows come from the multigrid scheme,
// "direct" rows from the direct method on the same mesh.
std::vector<ReferenceTable> build_tables() {
  std::vector<ReferenceTable> t;

  // square, n = 4: rows h = 2/512 and h = 2/1024
  t.push_back({DomainKind::Square, Complex(4.0, 0.0), 1.0, "2/1024",
               {ref(1, 2.20250569143, 0.0, "h=2/1024 mg"), ref(2, -0.21225275994, 0.0, "h=2/1024 mg"),
                ref(3, -0.21225290397, 0.0, "h=2/1024 mg"), ref(4, -0.90805872239, 0.0, "h=2/1024 mg")},
               {ref(1, 2.20250138680, 0.0, "h=2/512 direct"), ref(2, -0.21225453108, 0.0, "h=2/512 direct"),
                ref(3, -0.21225510721, 0.0, "h=2/512 direct"), ref(4, -0.90806663225, 0.0, "h=2/512 direct")},
               {{1}, {2, 3}, {4}}});

  // L-shape, n = 4: rows h = 2√2/512 and 2√2/1024
  t.push_back({DomainKind::LShape, Complex(4.0, 0.0), 1.0, "2sqrt2/1024",
               {ref(1, 2.53320886492, 0.0, "h=2sqrt2/1024 mg"), ref(2, 0.85774947865, 0.0, "h=2sqrt2/1024 mg"),
                ref(4, -1.08530278002, 0.0, "h=2sqrt2/1024 mg"), ref(5, -1.09120730930, 0.0, "h=2sqrt2/1024 mg")},
               {ref(1, 2.53319456614, 0.0, "h=2sqrt2/512 direct"), ref(2, 0.85768686308, 0.0, "h=2sqrt2/512 direct"),
                ref(4, -1.08531466335, 0.0, "h=2sqrt2/512 direct"),
                ref(5, -1.09122758486, 0.0, "h=2sqrt2/512 direct")},
               {{1}, {2}, {4, 5}}});

  // slit square, n = 4
  t.push_back({DomainKind::SlitSquare, Complex(4.0, 0.0), 1.0, "2/1024",
               {ref(1, 1.48470998965, 0.0, "h=2/1024 mg"), ref(2, 0.46121500815, 0.0, "h=2/1024 mg"),
                ref(5, -1.89987768376, 0.0, "h=2/1024 mg"), ref(6, -1.92878382991, 0.0, "h=2/1024 mg")},
               {ref(1, 1.48470424180, 0.0, "h=2/512 direct"), ref(2, 0.46069878359, 0.0, "h=2/512 direct"),
                ref(5, -1.89989614929, 0.0, "h=2/512 direct"), ref(6, -1.92887274318, 0.0, "h=2/512 direct")},
               {{1}, {2}, {5, 6}}});

  // square, n = 4+4i (direct solve unavailable at the finest mesh)
  t.push_back({DomainKind::Square, Complex(4.0, 4.0), 1.0, "2/1024",
               {ref(1, 0.6865533933, 2.49529414, "h=2/1024 mg"), ref(2, -0.3430468763, 0.850746, "h=2/1024 mg"),
                ref(3, -0.3430460656, 0.8507457, "h=2/1024 mg"), ref(6, -0.9501125093, 0.54009649, "h=2/1024 mg")},
               {ref(1, 0.6865580791, 2.49529459, "h=2/512 direct"),
                ref(2, -0.3430478705, 0.850744489, "h=2/512 direct"),
                ref(3, -0.3430446278, 0.8507432795, "h=2/512 direct"),
                ref(6, -0.9501192972, 0.540095814, "h=2/512 direct")},
               {{1}, {2, 3}, {6}}});

  // L-shape, n = 4+4i
  t.push_back({DomainKind::LShape, Complex(4.0, 4.0), 1.0, "2sqrt2/1024",
               {ref(1, 0.5142928934, 2.88232587, "h=2sqrt2/1024 mg"),
                ref(2, 0.3970089008, 1.45895479, "h=2sqrt2/1024 mg"),
                ref(8, -1.1593938106, 0.53552117, "h=2sqrt2/1024 mg"),
                ref(9, -1.1423342849, 0.52981075, "h=2sqrt2/1024 mg")},
               {ref(1, 0.5143105650, 2.88233395, "h=2sqrt2/512 direct"),
                ref(2, 0.3969716223, 1.45891081, "h=2sqrt2/512 direct"),
                ref(8, -1.1594164940, 0.53552365, "h=2sqrt2/512 direct"),
                ref(9, -1.1423443060, 0.52981229, "h=2sqrt2/512 direct")},
               {{1}, {2}, {8, 9}}});

  // slit square, n = 4+4i
  t.push_back({DomainKind::SlitSquare, Complex(4.0, 4.0), 1.0, "2/1024",
               {ref(1, 0.919307780, 1.77078671, "h=2/1024 mg"), ref(2, 0.292183070, 0.9996367, "h=2/1024 mg"),
                ref(6, -2.859162853, 0.5047693, "h=2/1024 mg"), ref(7, -2.849868193, 0.4930741, "h=2/1024 mg")},
               {ref(1, 0.919316438, 1.77078218, "h=2/512 direct"), ref(2, 0.291737232, 0.99939462, "h=2/512 direct"),
                ref(6, -2.859202716, 0.50477279, "h=2/512 direct"),
                ref(7, -2.850238737, 0.49299969, "h=2/512 direct")},
               {{1}, {2}, {6, 7}}});
  return t;
}

}  // namespace

const ReferenceValue& ReferenceTable::at(int index) const {
  for (const auto& v : values)
    if (v.index == index) return v;
  throw ParameterError("reference table has no entry lambda_" + std::to_string(index));
}

std::vector<ReferenceTable> all_reference_tables() {
  static const std::vector<ReferenceTable> tables = build_tables();
  return tables;
}

ReferenceTable emit_reference_table(DomainKind domain, Complex n) {
  for (const auto& t : all_reference_tables())
    if (t.domain == domain && std::abs(t.n - n) <= 1e-12) return t;
  std::ostringstream msg;
  msg << "no reference values for domain " << DomainSpec{domain}.name() << " with n = " << n.real() << "+"
      << n.imag() << "i";
  throw ParameterError(msg.str());
}

}  // namespace steklov
