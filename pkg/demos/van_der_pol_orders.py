"""Order increase per correction loop on the stiff van der Pol oscillator.

Three scheme families, all on M quadrature nodes per step:

  BE*3:M=3           three backward-Euler loops     -> H^3 leading error
  DIRK2-SA*2:M=4     two 2nd-order SDIRK loops      -> H^4
  Radau3+BE*2:M=6    3rd-order prediction + 2 BE    -> H^5

At small eps a second error branch proportional to eps appears; its exponent
is the *stage* order of the prediction (1 for BE/DIRK2-SA, 2 for RadauIIA3),
which is why the z-component slope degrades once H gets small enough.
"""
import numpy as np

import indc

EPS = 1e-4
CASES = [
    ("BE:M=3,K=2", 0.5, range(3, 9)),
    ("DIRK2SA:M=4,K=1", 0.5, range(3, 9)),
    ("Radau3+BE*2:M=6", 0.75, range(3, 6)),
]

problem = indc.van_der_pol(EPS)
for spec, T, krange in CASES:
    scheme = indc.parse_scheme(spec)
    prediction = indc.predict_orders(scheme, EPS)
    table = indc.sweep(problem, scheme, T, [2.0 ** -k for k in krange])
    print(f"{spec}   (T = {T}, predicted H^{prediction.leading} "
          f"+ eps*H^{prediction.eps_term})")
    print(f"  {'H':>10}  {'err_y':>10}  {'err_z':>10}")
    for H, ey, ez in zip(table.H, table.err_y, table.err_z):
        print(f"  {H:10.5f}  {ey:10.3e}  {ez:10.3e}")
    print(f"  fitted slopes: y {indc.fit_order(table, component='y'):.2f}, "
          f"z {indc.fit_order(table, component='z'):.2f}")
    if prediction.dip_H is not None:
        print(f"  error-cancellation dip expected near H ~ "
              f"{prediction.dip_H:.1e}")
    print()
