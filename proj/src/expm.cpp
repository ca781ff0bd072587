#include <cmath>

#include "ntfhmm/hmm.hpp"
#include "ntfhmm/types.hpp"

namespace ntfhmm {
namespace {

// Pade numerator coefficients for orders 3..13 (Higham 2005).
constexpr double kB3[] = {120.0, 60.0, 12.0, 1.0};
constexpr double kB5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr double kB7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0};
constexpr double kB9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                          2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr double kB13[] = {64764752532480000.0,
                           32382376266240000.0,
                           7771770303897600.0,
                           1187353796428800.0,
                           129060195264000.0,
                           10559470521600.0,
                           670442572800.0,
                           33522128640.0,
                           1323241920.0,
                           40840800.0,
                           960960.0,
                           16380.0,
                           182.0,
                           1.0};

// 1-norm bounds under which each order meets double precision.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

Matrix solve_pade(const Matrix& U, const Matrix& V) {
    // exp(A) ~ (V - U)^{-1} (V + U)
    return (V - U).partialPivLu().solve(V + U);
}

Matrix pade_low(const Matrix& A, const double* b, int m) {
    const auto n = A.rows();
    const Matrix A2 = A * A;
    Matrix U = Matrix::Zero(n, n);
    Matrix V = Matrix::Zero(n, n);
    Matrix P = Matrix::Identity(n, n);  // A^{2j}
    U.diagonal().array() += b[1];
    V.diagonal().array() += b[0];
    for (int j = 2; j <= m; j += 2) {
        P = P * A2;
        V += b[j] * P;
        if (j + 1 <= m) U += b[j + 1] * P;
    }
    return solve_pade(A * U, V);
}

Matrix pade13(const Matrix& A) {
    const auto n = A.rows();
    const Matrix A2 = A * A;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A2 * A4;
    const double* b = kB13;
    const Matrix U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
             b[1] * Matrix::Identity(n, n));
    const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
                     b[2] * A2 + b[0] * Matrix::Identity(n, n);
    return solve_pade(U, V);
}

}  // namespace

Matrix expm(const Matrix& A) {
    if (A.rows() != A.cols()) throw ValidationError("expm: matrix must be square");
    if (!A.allFinite()) throw ValidationError("expm: matrix has non-finite entries");
    const auto n = A.rows();
    if (n == 0) return Matrix(0, 0);

    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 <= kTheta3) return pade_low(A, kB3, 3);
    if (norm1 <= kTheta5) return pade_low(A, kB5, 5);
    if (norm1 <= kTheta7) return pade_low(A, kB7, 7);
    if (norm1 <= kTheta9) return pade_low(A, kB9, 9);

    int squarings = 0;
    double scale = 1.0;
    while (norm1 * scale > kTheta13) {
        ++squarings;
        scale *= 0.5;
    }
    Matrix X = pade13(A * scale);
    for (int s = 0; s < squarings; ++s) X = X * X;
    return X;
}

}  // namespace ntfhmm
