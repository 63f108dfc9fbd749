/// Legendre polynomial `P_l(x)` by Bonnet's recurrence.
pub fn legendre_p(l: usize, x: f64) -> f64 {
    let (p, _) = legendre_pair(l, x);
    p
}

/// `dP_l/dx`, with the endpoint limits `P_l'(±1) = (±1)^{l+1} l(l+1)/2`.
pub fn legendre_p_deriv(l: usize, x: f64) -> f64 {
    let (p, p_prev) = legendre_pair(l, x);
    deriv_from(l, x, p, p_prev)
}

/// `(P_l(x), P_l'(x))` for `l = 0..=l_max`.
pub fn legendre_sequence(l_max: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::with_capacity(l_max + 1);
    let mut dp = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    dp.push(0.0);
    if l_max >= 1 {
        p.push(x);
        dp.push(1.0);
    }
    for l in 2..=l_max {
        let lf = l as f64;
        let next = ((2.0 * lf - 1.0) * x * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
        p.push(next);
        // P_l' = P_{l-2}' + (2l − 1) P_{l-1} avoids the 1/(1 − x²) endpoint division.
        dp.push(dp[l - 2] + (2.0 * lf - 1.0) * p[l - 1]);
    }
    (p, dp)
}

fn legendre_pair(l: usize, x: f64) -> (f64, f64) {
    if l == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for n in 2..=l {
        let nf = n as f64;
        let next = ((2.0 * nf - 1.0) * x * cur - (nf - 1.0) * prev) / nf;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

fn deriv_from(l: usize, x: f64, p: f64, p_prev: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let lf = l as f64;
    let edge = lf * (lf + 1.0) / 2.0;
    if x == 1.0 {
        edge
    } else if x == -1.0 {
        if l % 2 == 0 {
            -edge
        } else {
            edge
        }
    } else {
        lf * (p_prev - x * p) / (1.0 - x * x)
    }
}
