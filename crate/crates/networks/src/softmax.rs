/// Max-shifted softmax.
pub fn softmax(p: &[f64]) -> Vec<f64> {
    let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = p.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
