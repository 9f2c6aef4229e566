/// Golden-section search for the minimum of `f` on `[a, b]`, run until the
/// bracket is no wider than `tol`.
///
/// Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    // 200 iterations shrink any bracket below one ulp.
    for _ in 0..200 {
        if (b - a) <= tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }

    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, fx) = golden_section_minimize(|x| (x - 0.3).powi(2) + 2.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn respects_tolerance() {
        let mut evals = 0;
        golden_section_minimize(
            |x| {
                evals += 1;
                x.abs()
            },
            -1.0,
            1.0,
            1e-3,
        );
        assert!(evals < 25);
    }
}
