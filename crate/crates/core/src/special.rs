//! Integer-order Bessel functions of the first kind and their zeros.

/// J_n(x) for integer order and real argument.
///
/// Miller's backward recurrence normalised with J_0 + 2 Σ J_2k = 1. Accurate to
/// a few ulps of max(|J_n|, 1e-16) for |x| up to a few hundred.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if n < 0 {
        let v = bessel_j(-n, x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x < 0.0 {
        let v = bessel_j(n, -x);
        return if n % 2 == 0 { v } else { -v };
    }
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    let top = n.max(x.ceil() as usize);
    let mut m = top + 30 + (40.0 * top as f64).sqrt() as usize;
    if m % 2 == 1 {
        m += 1;
    }

    const BIG: f64 = 1e250;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=m).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if k - 1 == n {
            wanted = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > BIG {
            cur /= BIG;
            next /= BIG;
            norm /= BIG;
            wanted /= BIG;
        }
    }
    norm += cur;
    wanted / norm
}

/// The `k`-th positive zero (k ≥ 1) of J_n.
pub fn bessel_j_zero(n: u32, k: usize) -> f64 {
    assert!(k >= 1, "zeros are counted from 1");
    let n = n as i32;
    let step = 0.05;
    let mut count = 0;
    let mut a = if n == 0 { 0.0 } else { n as f64 * 0.5 + step };
    let mut fa = bessel_j(n, a);
    loop {
        let b = a + step;
        let fb = bessel_j(n, b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            count += 1;
            if count == k {
                let mut conv = roots::SimpleConvergency {
                    eps: 1e-15,
                    max_iter: 200,
                };
                let f = |x| bessel_j(n, x);
                return roots::find_root_brent(a, b, &f, &mut conv).unwrap_or(0.5 * (a + b));
            }
        }
        a = b;
        fa = fb;
    }
}
