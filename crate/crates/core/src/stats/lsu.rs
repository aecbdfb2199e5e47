/// Linear step-up selection of the methods that join the best method's group.
///
/// p-values are visited in descending order `p(1) ≥ … ≥ p(m)`, where `p(k)`
/// sits at position `pos(k) = m − k + 1` of the ascending order. At the first
/// `k` with `p(k) ≤ pos(k)·α/m`, the methods before it join; if there is no
/// such `k`, all join. Returns one flag per input p-value.
pub fn lsu_select(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[b].total_cmp(&p_values[a]).then(a.cmp(&b)));
    let cut = (1..=m).find(|&k| {
        let pos = m - k + 1;
        p_values[order[k - 1]] <= pos as f64 * alpha / m as f64
    });
    let joined = cut.map_or(m, |k| k - 1);
    let mut out = vec![false; m];
    for &i in &order[..joined] {
        out[i] = true;
    }
    out
}
