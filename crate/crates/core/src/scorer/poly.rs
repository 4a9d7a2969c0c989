//! Poly-encoder attention stages: code-context attention (optionally with
//! distinct target/non-target codes) followed by gloss attention over the
//! code-attended context.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, Axis};

use super::ops::{dot, softmax_backward, softmax_in_place};
use super::ScorerError;

/// Output of the code-context attention stage.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeAttention {
    /// m x n softmax weights, one row per code
    pub weights: Array2<f64>,
    /// Y_ctxt, m x d
    pub attended: Array2<f64>,
}

/// Row i of the result attends over the context rows with softmax(q_i . r_c_j).
pub fn poly_code_context_attention(codes: ArrayView2<'_, f64>, ctx: ArrayView2<'_, f64>) -> CodeAttention {
    let (m, n) = (codes.nrows(), ctx.nrows());
    let mut weights = Array2::zeros((m, n));
    for i in 0..m {
        let q = codes.row(i);
        for j in 0..n {
            weights[[i, j]] = dot(q, ctx.row(j));
        }
        softmax_in_place(weights.row_mut(i));
    }
    let attended = weights.dot(&ctx);
    CodeAttention { weights, attended }
}

/// Per-position queries, m x n x d: entry (i, j) is the i-th code used at
/// context position j.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionQueries(pub Array3<f64>);

/// Builds `(M_t * Q_t) + (M_nt * Q_nt)` position by position. Masks are 0/1
/// per position and must partition the positions.
pub fn distinct_codes_query(
    target_mask: &[f64],
    nontarget_mask: &[f64],
    target_codes: ArrayView2<'_, f64>,
    nontarget_codes: ArrayView2<'_, f64>,
) -> Result<PositionQueries, ScorerError> {
    if target_mask.len() != nontarget_mask.len() {
        return Err(ScorerError::MaskOverlap);
    }
    let binary = |x: f64| x == 0.0 || x == 1.0;
    let partition = target_mask
        .iter()
        .zip(nontarget_mask)
        .all(|(&t, &nt)| binary(t) && binary(nt) && t + nt == 1.0);
    if !partition || target_codes.dim() != nontarget_codes.dim() {
        return Err(ScorerError::MaskOverlap);
    }
    let (m, d) = target_codes.dim();
    let n = target_mask.len();
    let mut q = Array3::zeros((m, n, d));
    for i in 0..m {
        for j in 0..n {
            let row = &target_codes.row(i) * target_mask[j] + &nontarget_codes.row(i) * nontarget_mask[j];
            q.index_axis_mut(Axis(0), i).row_mut(j).assign(&row);
        }
    }
    Ok(PositionQueries(q))
}

/// Target mask (1.0 at `indices`) and its complement over `n` positions.
pub fn target_masks(indices: &[usize], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; n];
    for &i in indices {
        if i < n {
            t[i] = 1.0;
        }
    }
    let nt = t.iter().map(|x| 1.0 - x).collect();
    (t, nt)
}

/// Code-context attention where the query for code i at position j is
/// `queries[i, j, :]`.
pub fn poly_position_attention(queries: &PositionQueries, ctx: ArrayView2<'_, f64>) -> CodeAttention {
    let q = &queries.0;
    let (m, n) = (q.len_of(Axis(0)), ctx.nrows());
    let mut weights = Array2::zeros((m, n));
    for i in 0..m {
        let qi = q.index_axis(Axis(0), i);
        for j in 0..n {
            weights[[i, j]] = dot(qi.row(j), ctx.row(j));
        }
        softmax_in_place(weights.row_mut(i));
    }
    let attended = weights.dot(&ctx);
    CodeAttention { weights, attended }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlossAttention {
    /// softmax over the m code-attended rows
    pub weights: Array1<f64>,
    pub y_final: Array1<f64>,
    pub score: f64,
}

/// Attends over Y_ctxt with `sense` as query and scores y_final . sense.
pub fn poly_gloss_attention(attended: ArrayView2<'_, f64>, sense: ArrayView1<'_, f64>) -> GlossAttention {
    let mut weights: Array1<f64> = attended.rows().into_iter().map(|y| dot(sense, y)).collect();
    softmax_in_place(weights.view_mut());
    let y_final = weights.dot(&attended);
    let score = dot(y_final.view(), sense);
    GlossAttention {
        weights,
        y_final,
        score,
    }
}

/// Backward through [`poly_gloss_attention`] for upstream `g = dL/dscore`.
/// Adds into `d_attended`; returns the gradient for `sense`.
pub(crate) fn gloss_attention_backward(
    attended: ArrayView2<'_, f64>,
    sense: ArrayView1<'_, f64>,
    fwd: &GlossAttention,
    g: f64,
    d_attended: &mut Array2<f64>,
) -> Array1<f64> {
    let d_yf = &sense * g;
    let mut d_sense = &fwd.y_final * g;
    let d_w: Array1<f64> = attended.rows().into_iter().map(|y| dot(d_yf.view(), y)).collect();
    for (i, mut row) in d_attended.rows_mut().into_iter().enumerate() {
        row.scaled_add(fwd.weights[i], &d_yf);
    }
    let d_logits = softmax_backward(fwd.weights.view(), d_w.view());
    for (i, mut row) in d_attended.rows_mut().into_iter().enumerate() {
        row.scaled_add(d_logits[i], &sense);
        d_sense.scaled_add(d_logits[i], &attended.row(i));
    }
    d_sense
}

/// Backward through the code-context stage. `query(i, j)` gives the query
/// used for code i at position j; `d_query(i, j, grad)` receives its
/// gradient. Adds into `d_ctx`.
pub(crate) fn code_attention_backward<'q>(
    ctx: ArrayView2<'_, f64>,
    fwd: &CodeAttention,
    d_attended: &Array2<f64>,
    query: impl Fn(usize, usize) -> ArrayView1<'q, f64>,
    mut d_query: impl FnMut(usize, usize, ArrayView1<'_, f64>, f64),
    d_ctx: &mut Array2<f64>,
) {
    let (m, n) = fwd.weights.dim();
    for i in 0..m {
        let dy = d_attended.row(i);
        let d_w: Array1<f64> = (0..n).map(|j| dot(dy, ctx.row(j))).collect();
        for j in 0..n {
            d_ctx.row_mut(j).scaled_add(fwd.weights[[i, j]], &dy);
        }
        let d_logits = softmax_backward(fwd.weights.row(i), d_w.view());
        for j in 0..n {
            let g = d_logits[j];
            if g == 0.0 {
                continue;
            }
            d_query(i, j, ctx.row(j), g);
            d_ctx.row_mut(j).scaled_add(g, &query(i, j));
        }
    }
}
