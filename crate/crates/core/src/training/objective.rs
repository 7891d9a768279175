use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{Coupling, InteractionModel, Model};
use crate::numerics::{AdamState, DenseMatrix, ForwardCache, MlpGrads};
use crate::scalar::{axpy, dot, squared_norm, Scalar};
use crate::training::TrainSet;

/// Users per work unit. Fixed so reductions do not depend on the thread count.
const USER_CHUNK: usize = 64;
/// Items per work unit for content-network passes.
const ITEM_CHUNK: usize = 16;

/// Which loss is being minimized. The coupling decides both the item vector
/// fed to the interaction and the item regularizer:
/// relaxed `λ_H‖h − φ(x)‖²`, content-free `λ_H‖h‖²`, strict none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub coupling: Coupling,
    pub lambda_w: f64,
    pub lambda_h: f64,
}

impl Objective {
    pub fn of_model<T>(model: &Model<T>) -> Self {
        Self {
            coupling: model.variant.coupling,
            lambda_w: model.hyper.lambda_w,
            lambda_h: model.hyper.lambda_h,
        }
    }
}

/// Parameter groups a gradient step may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Owned {
    pub users: bool,
    pub items: bool,
    pub content: bool,
    pub tower: bool,
}

impl Owned {
    pub const CONTENT: Self = Self {
        users: false,
        items: false,
        content: true,
        tower: false,
    };

    /// Everything the joint gradient methods train for this model.
    pub fn joint<T: Scalar>(model: &Model<T>) -> Self {
        Self {
            users: true,
            items: model.embeddings.items.is_some() && model.variant.coupling != Coupling::Strict,
            content: model.extractor.is_some(),
            tower: model.interaction.is_deep(),
        }
    }

    fn check<T: Scalar>(&self, model: &Model<T>) -> Result<()> {
        if (self.items && model.embeddings.items.is_none())
            || (self.content && model.extractor.is_none())
            || (self.tower && !model.interaction.is_deep())
        {
            return Err(Error::dim("requested parameter group does not exist in this model"));
        }
        Ok(())
    }
}

/// Gradients laid out like the parameter groups of [`Owned`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub users: Option<DenseMatrix<T>>,
    pub items: Option<DenseMatrix<T>>,
    pub content: Option<MlpGrads<T>>,
    pub tower: Option<MlpGrads<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn slices(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        if let Some(g) = &self.users {
            out.push(g.as_slice());
        }
        if let Some(g) = &self.items {
            out.push(g.as_slice());
        }
        if let Some(g) = &self.content {
            out.extend(g.slices());
        }
        if let Some(g) = &self.tower {
            out.extend(g.slices());
        }
        out
    }

    pub fn flatten(&self) -> Vec<T> {
        self.slices().concat()
    }

    fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

fn param_slices<T: Scalar>(model: &Model<T>, owned: Owned) -> Vec<&[T]> {
    let mut out = Vec::new();
    if owned.users {
        out.push(model.embeddings.users.as_slice());
    }
    if owned.items {
        out.push(model.embeddings.items.as_ref().expect("checked").as_slice());
    }
    if owned.content {
        out.extend(model.extractor.as_ref().expect("checked").net.param_slices());
    }
    if owned.tower {
        out.extend(model.interaction.net().expect("checked").param_slices());
    }
    out
}

fn param_slices_mut<T: Scalar>(model: &mut Model<T>, owned: Owned) -> Vec<&mut [T]> {
    let mut out = Vec::new();
    if owned.users {
        out.push(model.embeddings.users.as_mut_slice());
    }
    if owned.items {
        out.push(model.embeddings.items.as_mut().expect("checked").as_mut_slice());
    }
    if owned.content {
        out.extend(model.extractor.as_mut().expect("checked").net.param_slices_mut());
    }
    if owned.tower {
        out.extend(model.interaction.net_mut().expect("checked").param_slices_mut());
    }
    out
}

/// Lengths of the parameter arrays of `owned`, in gradient order.
pub fn slot_lengths<T: Scalar>(model: &Model<T>, owned: Owned) -> Result<Vec<usize>> {
    owned.check(model)?;
    Ok(param_slices(model, owned).iter().map(|s| s.len()).collect())
}

/// Concatenated parameters of `owned`, in gradient order.
pub fn flat_params<T: Scalar>(model: &Model<T>, owned: Owned) -> Result<Vec<T>> {
    owned.check(model)?;
    Ok(param_slices(model, owned).concat())
}

pub fn set_flat_params<T: Scalar>(model: &mut Model<T>, owned: Owned, values: &[T]) -> Result<()> {
    owned.check(model)?;
    let mut slots = param_slices_mut(model, owned);
    let total: usize = slots.iter().map(|s| s.len()).sum();
    if total != values.len() {
        return Err(Error::dim(format!("{} values for {total} parameters", values.len())));
    }
    let mut at = 0;
    for s in slots.iter_mut() {
        s.copy_from_slice(&values[at..at + s.len()]);
        at += s.len();
    }
    Ok(())
}

/// One optimizer step on `owned`. A frozen tower output layer receives a zero
/// gradient, which leaves it exactly unchanged.
pub fn apply_step<T: Scalar>(model: &mut Model<T>, owned: Owned, adam: &mut AdamState<T>, mut grads: Gradients<T>) -> Result<()> {
    if owned.tower && !model.interaction.output_trainable() {
        if let Some(t) = &mut grads.tower {
            let last = t.layers.last_mut().expect("tower has an output layer");
            last.weights.as_mut_slice().iter_mut().for_each(|g| *g = T::zero());
        }
    }
    let g = grads.slices();
    adam.step(param_slices_mut(model, owned), g)
}

struct ItemView<T> {
    /// Vector fed to the interaction.
    v: Vec<T>,
    /// Content output and its cache (when a content branch is in use).
    phi: Option<(Vec<T>, Option<ForwardCache<T>>)>,
}

struct ChunkOut<T> {
    obj: T,
    grad_w: Vec<T>,
    grad_v: Option<DenseMatrix<T>>,
    tower: Option<MlpGrads<T>>,
}

/// Objective over `items` (all users) and, when `grad` is given, its gradient
/// with respect to that parameter subset. The user regularizer is multiplied by
/// `w_scale`, so summing batch values with `w_scale = |batch| / |active|` over
/// a partition of the active items reproduces the full objective.
pub fn batch_objective<T: Scalar>(
    model: &Model<T>,
    set: &TrainSet<T>,
    objective: &Objective,
    items: &[usize],
    w_scale: T,
    grad: Option<Owned>,
) -> Result<(T, Option<Gradients<T>>)> {
    let owned = grad.unwrap_or_default();
    owned.check(model)?;
    let want = grad.is_some();
    let k = model.k();
    let nu = set.num_users();
    if model.embeddings.num_users() != nu {
        return Err(Error::dim("model and training set disagree on the user count"));
    }
    let coupling = objective.coupling;
    let lw = T::of(objective.lambda_w);
    let lh = T::of(objective.lambda_h);

    let needs_phi = coupling != Coupling::ContentFree;
    let cache_phi = want && owned.content;
    let views: Vec<ItemView<T>> = items
        .par_iter()
        .map(|&i| -> Result<ItemView<T>> {
            let phi = if needs_phi {
                let ex = model
                    .extractor
                    .as_ref()
                    .ok_or_else(|| Error::Unsupported("objective needs a content network".into()))?;
                let x = set.feature_row(i)?;
                if cache_phi {
                    let cache = ex.net.forward(x)?;
                    Some((cache.output().to_vec(), Some(cache)))
                } else {
                    Some((ex.net.predict(x)?, None))
                }
            } else {
                None
            };
            let v = match coupling {
                Coupling::Strict => phi.as_ref().expect("strict uses content").0.clone(),
                _ => model
                    .embeddings
                    .h(i)
                    .ok_or_else(|| Error::Unsupported("objective needs item embeddings".into()))?
                    .to_vec(),
            };
            Ok(ItemView { v, phi })
        })
        .collect::<Result<_>>()?;

    let want_v = want
        && match coupling {
            Coupling::Strict => owned.content,
            _ => owned.items,
        };
    let want_w = want && owned.users;
    let want_tower = want && owned.tower;
    let nb = items.len();
    let mut slot_of = vec![usize::MAX; set.num_items()];
    for (b, &i) in items.iter().enumerate() {
        slot_of[i] = b;
    }

    let chunks: Vec<ChunkOut<T>> = (0..nu.div_ceil(USER_CHUNK))
        .into_par_iter()
        .map(|chunk| -> Result<ChunkOut<T>> {
            let lo = chunk * USER_CHUNK;
            let hi = (lo + USER_CHUNK).min(nu);
            let mut out = ChunkOut {
                obj: T::zero(),
                grad_w: if want_w { vec![T::zero(); (hi - lo) * k] } else { Vec::new() },
                grad_v: want_v.then(|| DenseMatrix::zeros(nb, k)),
                tower: if want_tower { model.interaction.net().map(MlpGrads::zeros_like) } else { None },
            };
            let mut r = vec![T::zero(); nb];
            let mut c = vec![T::one(); nb];
            for u in lo..hi {
                let row = set.user_row(u);
                for o in row {
                    let b = slot_of[o.index];
                    if b != usize::MAX {
                        r[b] = o.r;
                        c[b] = o.c;
                    }
                }
                let w = model.embeddings.w(u);
                let gw_off = (u - lo) * k;
                for b in 0..nb {
                    let v = &views[b].v;
                    let (rb, cb) = (r[b], c[b]);
                    match (&model.interaction, want) {
                        (InteractionModel::DotProduct, _) | (_, false) => {
                            let s = if want {
                                dot(w, v)
                            } else {
                                model.interaction.score(w, v)
                            };
                            let e = rb - s;
                            out.obj += cb * e * e;
                            if want {
                                let g = -T::two() * cb * e;
                                if want_w {
                                    axpy(g, v, &mut out.grad_w[gw_off..gw_off + k]);
                                }
                                if let Some(gv) = &mut out.grad_v {
                                    axpy(g, w, gv.row_mut(b));
                                }
                            }
                        }
                        (deep, true) => {
                            let sg = deep.score_backward(w, v, |s| -T::two() * cb * (rb - s), out.tower.as_mut())?;
                            let e = rb - sg.score;
                            out.obj += cb * e * e;
                            if want_w {
                                for (d, s) in out.grad_w[gw_off..gw_off + k].iter_mut().zip(&sg.grad_w) {
                                    *d += *s;
                                }
                            }
                            if let Some(gv) = &mut out.grad_v {
                                for (d, s) in gv.row_mut(b).iter_mut().zip(&sg.grad_h) {
                                    *d += *s;
                                }
                            }
                        }
                    }
                }
                for o in row {
                    let b = slot_of[o.index];
                    if b != usize::MAX {
                        r[b] = T::zero();
                        c[b] = T::one();
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut obj = T::zero();
    let mut grads = Gradients {
        users: want_w.then(|| DenseMatrix::zeros(nu, k)),
        items: (want && owned.items).then(|| DenseMatrix::zeros(set.num_items(), k)),
        content: None,
        tower: if want_tower { model.interaction.net().map(MlpGrads::zeros_like) } else { None },
    };
    let mut grad_v = want_v.then(|| DenseMatrix::<T>::zeros(nb, k));
    for (chunk, out) in chunks.into_iter().enumerate() {
        obj += out.obj;
        if let Some(gu) = &mut grads.users {
            let lo = chunk * USER_CHUNK * k;
            gu.as_mut_slice()[lo..lo + out.grad_w.len()].copy_from_slice(&out.grad_w);
        }
        if let (Some(acc), Some(part)) = (&mut grad_v, &out.grad_v) {
            for (d, s) in acc.as_mut_slice().iter_mut().zip(part.as_slice()) {
                *d += *s;
            }
        }
        if let (Some(acc), Some(part)) = (&mut grads.tower, &out.tower) {
            acc.add_assign(part);
        }
    }

    // user regularizer
    let mut reg_w = T::zero();
    for u in 0..nu {
        reg_w += squared_norm(model.embeddings.w(u));
    }
    obj += w_scale * lw * reg_w;
    if let Some(gu) = &mut grads.users {
        let f = T::two() * w_scale * lw;
        for u in 0..nu {
            axpy(f, model.embeddings.w(u), gu.row_mut(u));
        }
    }

    // item regularizer and the chain into the item parameters
    let mut content_up: Vec<Option<Vec<T>>> = vec![None; nb];
    for (b, &i) in items.iter().enumerate() {
        match coupling {
            Coupling::Relaxed => {
                let h = &views[b].v;
                let phi = &views[b].phi.as_ref().expect("relaxed uses content").0;
                let d: Vec<T> = h.iter().zip(phi).map(|(a, p)| *a - *p).collect();
                obj += lh * squared_norm(&d);
                if let Some(gi) = &mut grads.items {
                    let row = gi.row_mut(i);
                    row.copy_from_slice(grad_v.as_ref().expect("items owned").row(b));
                    axpy(T::two() * lh, &d, row);
                }
                if want && owned.content {
                    content_up[b] = Some(d.iter().map(|x| -T::two() * lh * *x).collect());
                }
            }
            Coupling::ContentFree => {
                let h = &views[b].v;
                obj += lh * squared_norm(h);
                if let Some(gi) = &mut grads.items {
                    let row = gi.row_mut(i);
                    row.copy_from_slice(grad_v.as_ref().expect("items owned").row(b));
                    axpy(T::two() * lh, h, row);
                }
            }
            Coupling::Strict => {
                if want && owned.content {
                    content_up[b] = Some(grad_v.as_ref().expect("content owned").row(b).to_vec());
                }
            }
        }
    }

    if want && owned.content {
        let net = &model.extractor.as_ref().expect("checked").net;
        let parts: Vec<MlpGrads<T>> = (0..nb.div_ceil(ITEM_CHUNK))
            .into_par_iter()
            .map(|chunk| -> Result<MlpGrads<T>> {
                let mut g = MlpGrads::zeros_like(net);
                for b in chunk * ITEM_CHUNK..((chunk + 1) * ITEM_CHUNK).min(nb) {
                    if let (Some(up), Some((_, Some(cache)))) = (&content_up[b], &views[b].phi) {
                        net.backward_into(cache, up, &mut g)?;
                    }
                }
                Ok(g)
            })
            .collect::<Result<_>>()?;
        let mut total = MlpGrads::zeros_like(net);
        for p in &parts {
            total.add_assign(p);
        }
        grads.content = Some(total);
    }

    if !obj.is_finite() || (want && !grads.is_finite()) {
        return Err(Error::NonFinite("objective or gradient is not finite".into()));
    }
    Ok((obj, want.then_some(grads)))
}

/// Full objective over the active items.
pub fn objective_value<T: Scalar>(model: &Model<T>, set: &TrainSet<T>, objective: &Objective) -> Result<T> {
    Ok(batch_objective(model, set, objective, set.active_items(), T::one(), None)?.0)
}

/// Full objective and its gradient over the active items.
pub fn full_gradient<T: Scalar>(
    model: &Model<T>,
    set: &TrainSet<T>,
    objective: &Objective,
    owned: Owned,
) -> Result<(T, Gradients<T>)> {
    let (v, g) = batch_objective(model, set, objective, set.active_items(), T::one(), Some(owned))?;
    Ok((v, g.expect("gradient requested")))
}

/// `Σ c (r − ψ)² + λ_W Σ‖w‖² + λ_H Σ‖h − φ(x)‖²` over active items.
pub fn loss_relaxed<T: Scalar>(model: &Model<T>, set: &TrainSet<T>, lambda_w: f64, lambda_h: f64) -> Result<T> {
    objective_value(model, set, &Objective { coupling: Coupling::Relaxed, lambda_w, lambda_h })
}

/// `Σ c (r − ψ(w, φ(x)))² + λ_W Σ‖w‖²` over active items.
pub fn loss_strict<T: Scalar>(model: &Model<T>, set: &TrainSet<T>, lambda_w: f64) -> Result<T> {
    objective_value(model, set, &Objective { coupling: Coupling::Strict, lambda_w, lambda_h: 0.0 })
}

/// `Σ c (r − ψ)² + λ_W Σ‖w‖² + λ_H Σ‖h‖²` over active items.
pub fn loss_content_free<T: Scalar>(model: &Model<T>, set: &TrainSet<T>, lambda_w: f64, lambda_h: f64) -> Result<T> {
    objective_value(model, set, &Objective { coupling: Coupling::ContentFree, lambda_w, lambda_h })
}

/// `Σ_{i∈items} ‖target_i − φ(x_i)‖²` and, optionally, its content-network gradient.
pub fn content_mse<T: Scalar>(
    model: &Model<T>,
    set: &TrainSet<T>,
    targets: &DenseMatrix<T>,
    items: &[usize],
    want_grad: bool,
) -> Result<(T, Option<MlpGrads<T>>)> {
    let net = &model
        .extractor
        .as_ref()
        .ok_or_else(|| Error::Unsupported("model has no content network".into()))?
        .net;
    let parts: Vec<(T, Option<MlpGrads<T>>)> = items
        .par_chunks(ITEM_CHUNK)
        .map(|chunk| -> Result<(T, Option<MlpGrads<T>>)> {
            let mut loss = T::zero();
            let mut g = want_grad.then(|| MlpGrads::zeros_like(net));
            for &i in chunk {
                let x = set.feature_row(i)?;
                let target = targets.row(i);
                let cache = net.forward(x)?;
                let d: Vec<T> = cache.output().iter().zip(target).map(|(p, t)| *p - *t).collect();
                loss += squared_norm(&d);
                if let Some(g) = &mut g {
                    let up: Vec<T> = d.iter().map(|x| T::two() * *x).collect();
                    net.backward_into(&cache, &up, g)?;
                }
            }
            Ok((loss, g))
        })
        .collect::<Result<_>>()?;
    let mut loss = T::zero();
    let mut total = want_grad.then(|| MlpGrads::zeros_like(net));
    for (l, g) in &parts {
        loss += *l;
        if let (Some(t), Some(g)) = (&mut total, g) {
            t.add_assign(g);
        }
    }
    if !loss.is_finite() || total.as_ref().is_some_and(|g| g.flatten().iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("content regression loss is not finite".into()));
    }
    Ok((loss, total))
}
