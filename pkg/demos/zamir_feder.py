"""Zamir-Feder coefficients and the determinant identity behind them.

For a matrix A with orthonormal rows, h(AX) >= sum_j alpha_j^2 h(X_j)
with alpha_j^2 the squared column norms.  The Gaussian side reduces to

    F(Lambda) = log det(A Lambda A^T) - sum_j alpha_j^2 log(lambda_j) >= 0,

which follows from the Cauchy-Binet expansion of det(A Lambda A^T) into
squared minors.  This script checks all three pieces on random input.
"""

import numpy as np

import blepi


def main():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((5, 2)))
    A = Q.T  # 2 x 5 with orthonormal rows

    alpha_sq = blepi.zf_coefficients(A)
    print("alpha_j^2 =", np.array2string(alpha_sq, precision=4))
    print("sum =", alpha_sq.sum(), "(equals the number of rows)")

    print("\nF(Lambda) over random positive diagonals (all >= 0):")
    worst = np.inf
    for _ in range(2000):
        lam = rng.uniform(0.05, 20.0, 5)
        worst = min(worst, blepi.zf_F(A, lam))
    print("  minimum over 2000 draws:", worst)
    print("  at Lambda = I:", blepi.zf_F(A, np.ones(5)))

    lam = rng.uniform(0.1, 5.0, 5)
    B = A @ np.diag(np.sqrt(lam))
    lhs, rhs = blepi.cauchy_binet_check(B)
    print("\nCauchy-Binet: det(BB^T) =", lhs)
    print("   sum of squared minors =", rhs)

    # the datum view of the same inequality
    datum = blepi.make_zamir_feder_datum(A)
    res = blepi.solve_mg(datum)
    print("\nsolver on the Zamir-Feder datum: M_g =", f"{res.mg_value:+.2e}")


if __name__ == "__main__":
    main()
