use rand::Rng;

use super::tape::{ParamId, ParamStore, Tape, Var};
use super::tensor::Tensor;
use crate::{Error, Result};

/// Weights of one LSTM layer.
///
/// `w` is `[4h, d + h]` acting on `concat(x, h)`, `b` is `[4h]`. Gate rows are
/// stacked in the order input, forget, candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub w: ParamId,
    pub b: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmParams {
    /// Registers uniform `[-scale, scale]` weights and a forget-gate bias of 1.
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let w = store.add_uniform(
            format!("{prefix}.w"),
            &[4 * hidden, input_dim + hidden],
            scale,
            rng,
        );
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        let b = store.add(format!("{prefix}.b"), Tensor::vector(bias));
        Self {
            w,
            b,
            input_dim,
            hidden,
        }
    }

    /// Runs the layer over `xs` from a zero state and returns every hidden state.
    pub fn run(&self, tape: &mut Tape<'_>, xs: &[Var]) -> Result<Vec<Var>> {
        let mut h = tape.input(Tensor::zeros(&[self.hidden]));
        let mut c = h;
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            (h, c) = lstm_cell(tape, x, h, c, self)?;
            out.push(h);
        }
        Ok(out)
    }

    /// Final hidden state after consuming `xs` (zero vector if `xs` is empty).
    pub fn last_hidden(&self, tape: &mut Tape<'_>, xs: &[Var]) -> Result<Var> {
        match self.run(tape, xs)?.last() {
            Some(h) => Ok(*h),
            None => Ok(tape.input(Tensor::zeros(&[self.hidden]))),
        }
    }
}

/// One LSTM step: `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_cell(
    tape: &mut Tape<'_>,
    x: Var,
    h: Var,
    c: Var,
    p: &LstmParams,
) -> Result<(Var, Var)> {
    let hd = p.hidden;
    if tape.value(x).len() != p.input_dim || tape.value(h).len() != hd || tape.value(c).len() != hd
    {
        return Err(Error::Dimension(format!(
            "lstm cell expects x[{}], h[{hd}], c[{hd}]; got x{:?}, h{:?}, c{:?}",
            p.input_dim,
            tape.value(x).shape(),
            tape.value(h).shape(),
            tape.value(c).shape()
        )));
    }
    let w = tape.param(p.w);
    let b = tape.param(p.b);
    let xh = tape.concat(&[x, h])?;
    let z = tape.matvec(w, xh)?;
    let z = tape.add(z, b)?;
    let zi = tape.slice(z, 0, hd)?;
    let zf = tape.slice(z, hd, hd)?;
    let zg = tape.slice(z, 2 * hd, hd)?;
    let zo = tape.slice(z, 3 * hd, hd)?;
    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let g = tape.tanh(zg);
    let o = tape.sigmoid(zo);
    let fc = tape.mul(f, c)?;
    let ig = tape.mul(i, g)?;
    let c_next = tape.add(fc, ig)?;
    let tc = tape.tanh(c_next);
    let h_next = tape.mul(o, tc)?;
    Ok((h_next, c_next))
}
