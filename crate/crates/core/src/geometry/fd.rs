//! Central differences with Richardson extrapolation for vector-valued maps.

/// Returns (f(x), ∂_i f, ∂_i∂_j f) with `second[i * n + j]`. The second
/// derivatives are skipped (left empty) when `want_second` is false.
pub fn jet<F>(f: &F, x: &[f64], h: f64, levels: usize, want_second: bool) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let n = x.len();
    let f0 = f(x);
    let m = f0.len();
    let shifted = |offs: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in offs {
            y[i] += s;
        }
        f(&y)
    };
    let mut first = Vec::with_capacity(n);
    for i in 0..n {
        let est = |s: f64| {
            let p = shifted(&[(i, s)]);
            let q = shifted(&[(i, -s)]);
            (0..m).map(|a| (p[a] - q[a]) / (2.0 * s)).collect::<Vec<f64>>()
        };
        first.push(richardson(&est, h, levels));
    }
    let mut second = Vec::new();
    if want_second {
        second = vec![Vec::new(); n * n];
        for i in 0..n {
            let est = |s: f64| {
                let p = shifted(&[(i, s)]);
                let q = shifted(&[(i, -s)]);
                (0..m).map(|a| (p[a] - 2.0 * f0[a] + q[a]) / (s * s)).collect::<Vec<f64>>()
            };
            second[i * n + i] = richardson(&est, h, levels);
            for j in (i + 1)..n {
                let est = |s: f64| {
                    let pp = shifted(&[(i, s), (j, s)]);
                    let pm = shifted(&[(i, s), (j, -s)]);
                    let mp = shifted(&[(i, -s), (j, s)]);
                    let mm = shifted(&[(i, -s), (j, -s)]);
                    (0..m).map(|a| (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * s * s)).collect::<Vec<f64>>()
                };
                let d = richardson(&est, h, levels);
                second[j * n + i] = d.clone();
                second[i * n + j] = d;
            }
        }
    }
    (f0, first, second)
}

/// Richardson table for estimates with even error expansions in the step.
pub fn richardson<E>(est: &E, h: f64, levels: usize) -> Vec<f64>
where
    E: Fn(f64) -> Vec<f64> + ?Sized,
{
    let mut prev: Vec<Vec<f64>> = Vec::new();
    for l in 0..=levels {
        let mut row = vec![est(h / 2f64.powi(l as i32))];
        for k in 1..=l {
            let fac = 4f64.powi(k as i32);
            let a = &row[k - 1];
            let b = &prev[k - 1];
            row.push(a.iter().zip(b).map(|(ai, bi)| ai + (ai - bi) / (fac - 1.0)).collect());
        }
        prev = row;
    }
    prev.pop().unwrap()
}
