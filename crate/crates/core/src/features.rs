//! Grand-average templates and the canonical correlation pattern.
//!
//! For a trial `X` and class templates `X̂ᵏ`, all projected by a spatial
//! filter `W`, three coefficients are produced per class:
//!
//! * `ρ₁`: corr2 of `XᵀW` against `X̂ᵏᵀW`;
//! * `ρ₂`: both sides projected by the template-side canonical coefficients
//!   `Bₖ` of `cca(XᵀW, X̂ᵏᵀW)`;
//! * `ρ₃`: `(X − X̂ᵏ)ᵀW` against a contrast template `(X̄ᵏ − X̂ᵏ)ᵀW`, both
//!   projected by the trial-side coefficients `Aₖ` of their CCA. The
//!   contrast `X̄ᵏ` is the other class (binary) or the mean of all other
//!   classes (multiclass).
//!
//! The multiclass pattern additionally removes the mean of all templates
//! from the trial and from every template first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cca_whitened, corr2, CcaResult, Matrix, Whitened};

/// Which of the three coefficients a feature is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RhoKind {
    #[serde(rename = "rho1")]
    Direct,
    #[serde(rename = "rho2")]
    Canonical,
    #[serde(rename = "rho3")]
    Contrast,
}

impl RhoKind {
    pub const ALL: [RhoKind; 3] = [RhoKind::Direct, RhoKind::Canonical, RhoKind::Contrast];

    pub fn label(self) -> &'static str {
        match self {
            RhoKind::Direct => "rho1",
            RhoKind::Canonical => "rho2",
            RhoKind::Contrast => "rho3",
        }
    }
}

/// Provenance of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureTag {
    /// 1-based filter-bank index.
    pub bank: usize,
    pub class: usize,
    pub kind: RhoKind,
}

impl FeatureTag {
    pub fn header(&self) -> String {
        format!("b{}_c{}_{}", self.bank, self.class, self.kind.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpVector {
    pub coefficients: Vec<f64>,
    pub provenance: Vec<FeatureTag>,
}

/// Elementwise mean of equally shaped trials.
pub fn grand_average(trials: &[&Matrix]) -> Result<Matrix> {
    let first = trials
        .first()
        .ok_or_else(|| Error::Data("grand average of an empty class".into()))?;
    let mut sum = Matrix::zeros(first.rows(), first.cols());
    for x in trials {
        if x.shape() != first.shape() {
            return Err(Error::Shape("trials differ in shape".into()));
        }
        sum.add_assign(x);
    }
    sum.scale_assign(1.0 / trials.len() as f64);
    Ok(sum)
}

/// Trials drawn from a training split, tagged with their dataset indices.
///
/// Only the fold machinery can build one, which keeps held-out trials out of
/// template construction.
#[derive(Debug, Clone)]
pub struct Training<'a> {
    pub(crate) data: Vec<&'a Matrix>,
    pub(crate) labels: Vec<usize>,
    pub(crate) ids: Vec<usize>,
}

impl<'a> Training<'a> {
    pub(crate) fn new(data: Vec<&'a Matrix>, labels: Vec<usize>, ids: Vec<usize>) -> Self {
        debug_assert_eq!(data.len(), labels.len());
        debug_assert_eq!(data.len(), ids.len());
        Training { data, labels, ids }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn of_class(&self, class: usize) -> Vec<&'a Matrix> {
        self.data
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(x, _)| *x)
            .collect()
    }
}

/// Per-class grand averages for one filter bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateBank {
    pub templates: Vec<Matrix>,
    pub bank: usize,
    /// `(1/K)·Σ X̂ᵏ`
    pub mean: Matrix,
    /// Dataset indices of the trials averaged into the templates.
    pub source_trials: Vec<usize>,
}

impl TemplateBank {
    pub fn fit(training: &Training<'_>, n_classes: usize, bank: usize) -> Result<TemplateBank> {
        let templates = (0..n_classes)
            .map(|k| grand_average(&training.of_class(k)))
            .collect::<Result<Vec<_>>>()?;
        let mut source_trials = training.ids.clone();
        source_trials.sort_unstable();
        Ok(Self::assemble(templates, bank, source_trials))
    }

    fn assemble(templates: Vec<Matrix>, bank: usize, source_trials: Vec<usize>) -> TemplateBank {
        let refs: Vec<&Matrix> = templates.iter().collect();
        let mean = grand_average(&refs).expect("at least one template");
        TemplateBank {
            templates,
            bank,
            mean,
            source_trials,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.templates.len()
    }

    /// Whether trial `id` was averaged into these templates.
    pub fn contains_trial(&self, id: usize) -> bool {
        self.source_trials.binary_search(&id).is_ok()
    }

    /// Fails when any of `ids` contributed to the templates.
    pub fn ensure_excludes(&self, ids: &[usize]) -> Result<()> {
        match ids.iter().find(|&&id| self.contains_trial(id)) {
            Some(id) => Err(Error::Data(format!(
                "trial {id} is held out but contributed to the bank {} templates",
                self.bank
            ))),
            None => Ok(()),
        }
    }
}

/// Removes the template mean from a trial and from every template.
pub fn center_for_multiclass(
    x: &Matrix,
    templates: &TemplateBank,
) -> Result<(Matrix, Vec<Matrix>)> {
    if templates.n_classes() < 2 {
        return Err(Error::InvalidArgument(
            "centering needs at least 2 classes".into(),
        ));
    }
    if x.shape() != templates.mean.shape() {
        return Err(Error::Shape(format!(
            "trial {:?} vs templates {:?}",
            x.shape(),
            templates.mean.shape()
        )));
    }
    let centered = templates
        .templates
        .iter()
        .map(|t| t.sub(&templates.mean))
        .collect();
    Ok((x.sub(&templates.mean), centered))
}

/// Templates already projected by a spatial filter (each `T×P`), ready to
/// score many trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedTemplates {
    projected: Vec<Matrix>,
    /// Projected template mean, present for the multiclass pattern.
    centre: Option<Matrix>,
    w: Matrix,
    bank: usize,
    /// Whitened templates; `None` where the block is degenerate.
    template_white: Vec<Option<Whitened>>,
    /// Per class: mean of the other templates minus this one, whitened.
    contrast_white: Vec<Option<Whitened>>,
    contrasts: Vec<Matrix>,
}

impl ProjectedTemplates {
    /// Binary pattern: exactly two templates, no centering.
    pub fn binary(t1: &Matrix, t2: &Matrix, w: &Matrix, bank: usize) -> Result<Self> {
        if t1.shape() != t2.shape() || t1.rows() != w.rows() {
            return Err(Error::Shape("templates and filter disagree".into()));
        }
        Self::assemble(vec![t1.tr_matmul(w), t2.tr_matmul(w)], None, w, bank)
    }

    /// Multiclass pattern with template-mean centering.
    pub fn multiclass(templates: &TemplateBank, w: &Matrix) -> Result<Self> {
        Self::multiclass_with(templates, w, true)
    }

    fn multiclass_with(templates: &TemplateBank, w: &Matrix, centered: bool) -> Result<Self> {
        if templates.n_classes() < 2 {
            return Err(Error::InvalidArgument("need at least 2 classes".into()));
        }
        if templates.mean.rows() != w.rows() {
            return Err(Error::Shape("templates and filter disagree".into()));
        }
        let mut projected: Vec<Matrix> =
            templates.templates.iter().map(|t| t.tr_matmul(w)).collect();
        let centre = centered.then(|| templates.mean.tr_matmul(w));
        if let Some(c) = &centre {
            for p in &mut projected {
                p.sub_assign(c);
            }
        }
        Self::assemble(projected, centre, w, templates.bank)
    }

    fn assemble(
        projected: Vec<Matrix>,
        centre: Option<Matrix>,
        w: &Matrix,
        bank: usize,
    ) -> Result<Self> {
        let k_count = projected.len();
        let contrasts: Vec<Matrix> = (0..k_count)
            .map(|k| {
                let mut others = Matrix::zeros(projected[k].rows(), projected[k].cols());
                for (kk, t) in projected.iter().enumerate() {
                    if kk != k {
                        others.add_assign(t);
                    }
                }
                others.scale_assign(1.0 / (k_count - 1) as f64);
                others.sub(&projected[k])
            })
            .collect();
        Ok(ProjectedTemplates {
            template_white: projected
                .iter()
                .map(guarded_whiten)
                .collect::<Result<_>>()?,
            contrast_white: contrasts
                .iter()
                .map(guarded_whiten)
                .collect::<Result<_>>()?,
            contrasts,
            projected,
            centre,
            w: w.clone(),
            bank,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.projected.len()
    }

    pub fn n_features(&self) -> usize {
        3 * self.n_classes()
    }

    pub fn provenance(&self) -> Vec<FeatureTag> {
        (0..self.n_classes())
            .flat_map(|class| {
                RhoKind::ALL.map(|kind| FeatureTag {
                    bank: self.bank,
                    class,
                    kind,
                })
            })
            .collect()
    }

    /// Projects the trial `x` (C×T) and scores it against every class.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.rows() != self.w.rows() {
            return Err(Error::Shape(format!(
                "trial has {} channels, filter expects {}",
                x.rows(),
                self.w.rows()
            )));
        }
        let mut y = x.tr_matmul(&self.w);
        if y.shape() != self.projected[0].shape() {
            return Err(Error::Shape("trial length differs from templates".into()));
        }
        if let Some(c) = &self.centre {
            y.sub_assign(c);
        }
        self.score_projected(&y)
    }

    pub fn pattern(&self, x: &Matrix) -> Result<CcpVector> {
        Ok(CcpVector {
            coefficients: self.score(x)?,
            provenance: self.provenance(),
        })
    }
}

impl ProjectedTemplates {
    fn score_projected(&self, y: &Matrix) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(3 * self.n_classes());
        let y_white = guarded_whiten(y)?;
        for (k, tk) in self.projected.iter().enumerate() {
            out.push(guarded_corr2(y, tk)?);

            out.push(
                match guarded_cca(y_white.as_ref(), self.template_white[k].as_ref())? {
                    Some(r) => guarded_corr2(&y.matmul(&r.coeffs_b), &tk.matmul(&r.coeffs_b))?,
                    None => 0.0,
                },
            );

            let contrast = &self.contrasts[k];
            let residual = y.sub(tk);
            let residual_white = guarded_whiten(&residual)?;
            out.push(
                match guarded_cca(residual_white.as_ref(), self.contrast_white[k].as_ref())? {
                    Some(r) => {
                        guarded_corr2(&residual.matmul(&r.coeffs_a), &contrast.matmul(&r.coeffs_a))?
                    }
                    None => 0.0,
                },
            );
        }
        Ok(out)
    }
}

// A constant input carries no correlation information; it scores 0.
fn guarded_corr2(a: &Matrix, b: &Matrix) -> Result<f64> {
    match corr2(a, b) {
        Ok(r) => Ok(r),
        Err(Error::Degenerate(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn guarded_whiten(block: &Matrix) -> Result<Option<Whitened>> {
    match Whitened::new(block) {
        Ok(w) => Ok(Some(w)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn guarded_cca(a: Option<&Whitened>, b: Option<&Whitened>) -> Result<Option<CcaResult>> {
    let (Some(a), Some(b)) = (a, b) else {
        return Ok(None);
    };
    match cca_whitened(a, b) {
        Ok(r) if !r.correlations.is_empty() => Ok(Some(r)),
        Ok(_) => Ok(None),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Six coefficients of trial `x` against two class templates.
pub fn ccp_binary(x: &Matrix, t1: &Matrix, t2: &Matrix, w: &Matrix) -> Result<CcpVector> {
    ProjectedTemplates::binary(t1, t2, w, 0)?.pattern(x)
}

/// `3K` coefficients of trial `x` against mean-centered class templates.
pub fn ccp_multiclass(x: &Matrix, templates: &TemplateBank, w: &Matrix) -> Result<CcpVector> {
    ProjectedTemplates::multiclass(templates, w)?.pattern(x)
}
