#include <cstdio>
#include <cstdlib>

#include "aarc/libsvm.hpp"
#include "aarc/solvers.hpp"

// Fits a logistic model to a LIBSVM file with the hybrid solver and plain ARC.
int main(int argc, char **argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: quickstart <file.svm> [lambda]\n");
    return 2;
  }
  const double lambda = argc > 2 ? std::atof(argv[2]) : 1e-5;
  auto f = aarc::make_logistic(aarc::read_libsvm_file(argv[1]), lambda);
  const aarc::Vector x0 = aarc::Vector::Zero(f->dimension());

  const aarc::SolverRun hybrid = aarc::solve_hybrid_aarc(*f, x0);
  const aarc::SolverRun arc = aarc::solve_arc_baseline(*f, x0);
  for (const auto *r : {&hybrid, &arc})
    std::printf("%s f=%.12g |g|=%.2e successes=%ld iterations=%ld\n", aarc::to_string(r->status), r->f_final,
                r->grad_norm_final, r->successes, r->iterations);
  return 0;
}
