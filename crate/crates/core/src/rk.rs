//! Embedded explicit Runge-Kutta pairs for a four-component state, and the
//! PI step-size controller that drives them.
//!
//! Two pairs are provided: Dormand-Prince 5(4) and Dormand-Prince 8(5,3).
//! Both are FSAL: the derivative at the accepted end point is returned so the
//! next step can reuse it.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub type State4<T> = [T; 4];

/// Integration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dormand-Prince 5(4), 6 evaluations per step.
    Dopri5,
    /// Dormand-Prince 8(5,3), 12 evaluations per step.
    #[default]
    Dop853,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dopri5 => "dopri5",
            Method::Dop853 => "dop853",
        }
    }
}

/// Candidate step: new state, derivative there, and the scaled error norm.
pub(crate) struct Trial<T> {
    pub y: State4<T>,
    pub k_end: State4<T>,
    pub err: T,
}

#[inline]
fn axpy<T: Real>(y: &State4<T>, h: T, terms: &[(T, &State4<T>)]) -> State4<T> {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + *c * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

#[inline]
fn scale<T: Real>(y: &State4<T>, y_new: &State4<T>, i: usize, rtol: T, atol: T) -> T {
    atol + rtol * y[i].abs().max(y_new[i].abs())
}

pub(crate) struct Tolerance<T> {
    pub rtol: T,
    pub atol: T,
}

/// Coefficients converted into the working scalar type once per solve.
pub(crate) enum Tableau<T> {
    Dopri5(Box<Dopri5<T>>),
    Dop853(Box<Dop853<T>>),
}

impl<T: Real> Tableau<T> {
    pub fn new(method: Method) -> Self {
        match method {
            Method::Dopri5 => Tableau::Dopri5(Box::new(Dopri5::new())),
            Method::Dop853 => Tableau::Dop853(Box::new(Dop853::new())),
        }
    }

    pub fn controller(&self) -> PiController<T> {
        match self {
            Tableau::Dopri5(_) => PiController::new(5.0, 0.2, 10.0),
            Tableau::Dop853(_) => PiController::new(8.0, 0.333, 6.0),
        }
    }

    /// One trial step from `(t, y)` with derivative `k1`. `t_new` is passed
    /// separately so the last step lands exactly on the window end.
    #[inline]
    pub fn attempt<F>(
        &self,
        rhs: &F,
        t: T,
        y: &State4<T>,
        k1: &State4<T>,
        h: T,
        t_new: T,
        tol: &Tolerance<T>,
    ) -> Trial<T>
    where
        F: Fn(T, &State4<T>) -> State4<T>,
    {
        match self {
            Tableau::Dopri5(tab) => tab.attempt(rhs, t, y, k1, h, t_new, tol),
            Tableau::Dop853(tab) => tab.attempt(rhs, t, y, k1, h, t_new, tol),
        }
    }
}

pub(crate) struct Dopri5<T> {
    c: [T; 4],
    a2: T,
    a3: [T; 2],
    a4: [T; 3],
    a5: [T; 4],
    a6: [T; 5],
    b: [T; 5],
    e: [T; 6],
}

impl<T: Real> Dopri5<T> {
    fn new() -> Self {
        let l = T::lit;
        Self {
            c: [l(1.0 / 5.0), l(3.0 / 10.0), l(4.0 / 5.0), l(8.0 / 9.0)],
            a2: l(1.0 / 5.0),
            a3: [l(3.0 / 40.0), l(9.0 / 40.0)],
            a4: [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0)],
            a5: [l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0)],
            a6: [
                l(9017.0 / 3168.0),
                l(-355.0 / 33.0),
                l(46732.0 / 5247.0),
                l(49.0 / 176.0),
                l(-5103.0 / 18656.0),
            ],
            b: [
                l(35.0 / 384.0),
                l(500.0 / 1113.0),
                l(125.0 / 192.0),
                l(-2187.0 / 6784.0),
                l(11.0 / 84.0),
            ],
            e: [
                l(71.0 / 57600.0),
                l(-71.0 / 16695.0),
                l(71.0 / 1920.0),
                l(-17253.0 / 339200.0),
                l(22.0 / 525.0),
                l(-1.0 / 40.0),
            ],
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn attempt<F>(
        &self,
        rhs: &F,
        t: T,
        y: &State4<T>,
        k1: &State4<T>,
        h: T,
        t_new: T,
        tol: &Tolerance<T>,
    ) -> Trial<T>
    where
        F: Fn(T, &State4<T>) -> State4<T>,
    {
        let k2 = rhs(t + self.c[0] * h, &axpy(y, h, &[(self.a2, k1)]));
        let k3 = rhs(t + self.c[1] * h, &axpy(y, h, &[(self.a3[0], k1), (self.a3[1], &k2)]));
        let k4 = rhs(
            t + self.c[2] * h,
            &axpy(y, h, &[(self.a4[0], k1), (self.a4[1], &k2), (self.a4[2], &k3)]),
        );
        let k5 = rhs(
            t + self.c[3] * h,
            &axpy(
                y,
                h,
                &[(self.a5[0], k1), (self.a5[1], &k2), (self.a5[2], &k3), (self.a5[3], &k4)],
            ),
        );
        let k6 = rhs(
            t_new,
            &axpy(
                y,
                h,
                &[
                    (self.a6[0], k1),
                    (self.a6[1], &k2),
                    (self.a6[2], &k3),
                    (self.a6[3], &k4),
                    (self.a6[4], &k5),
                ],
            ),
        );
        let y_new = axpy(
            y,
            h,
            &[
                (self.b[0], k1),
                (self.b[1], &k3),
                (self.b[2], &k4),
                (self.b[3], &k5),
                (self.b[4], &k6),
            ],
        );
        let k7 = rhs(t_new, &y_new);

        let mut sum = T::zero();
        for i in 0..4 {
            let e = h
                * (self.e[0] * k1[i]
                    + self.e[1] * k3[i]
                    + self.e[2] * k4[i]
                    + self.e[3] * k5[i]
                    + self.e[4] * k6[i]
                    + self.e[5] * k7[i]);
            let r = e / scale(y, &y_new, i, tol.rtol, tol.atol);
            sum = sum + r * r;
        }
        Trial { y: y_new, k_end: k7, err: (sum / T::lit(4.0)).sqrt() }
    }
}

// Dormand-Prince 8(5,3) coefficients (Hairer, Nørsett & Wanner).
const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

pub(crate) struct Dop853<T> {
    c: [T; 10],
    a2: [T; 1],
    a3: [T; 2],
    a4: [T; 2],
    a5: [T; 3],
    a6: [T; 3],
    a7: [T; 4],
    a8: [T; 5],
    a9: [T; 6],
    a10: [T; 7],
    a11: [T; 8],
    a12: [T; 9],
    b: [T; 8],
    bhh: [T; 3],
    er: [T; 8],
}

impl<T: Real> Dop853<T> {
    fn new() -> Self {
        let l = T::lit;
        Self {
            c: [l(C2), l(C3), l(C4), l(C5), l(C6), l(C7), l(C8), l(C9), l(C10), l(C11)],
            a2: [l(A21)],
            a3: [l(A31), l(A32)],
            a4: [l(A41), l(A43)],
            a5: [l(A51), l(A53), l(A54)],
            a6: [l(A61), l(A64), l(A65)],
            a7: [l(A71), l(A74), l(A75), l(A76)],
            a8: [l(A81), l(A84), l(A85), l(A86), l(A87)],
            a9: [l(A91), l(A94), l(A95), l(A96), l(A97), l(A98)],
            a10: [l(A101), l(A104), l(A105), l(A106), l(A107), l(A108), l(A109)],
            a11: [l(A111), l(A114), l(A115), l(A116), l(A117), l(A118), l(A119), l(A1110)],
            a12: [
                l(A121),
                l(A124),
                l(A125),
                l(A126),
                l(A127),
                l(A128),
                l(A129),
                l(A1210),
                l(A1211),
            ],
            b: [l(B1), l(B6), l(B7), l(B8), l(B9), l(B10), l(B11), l(B12)],
            bhh: [l(BHH1), l(BHH2), l(BHH3)],
            er: [l(ER1), l(ER6), l(ER7), l(ER8), l(ER9), l(ER10), l(ER11), l(ER12)],
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn attempt<F>(
        &self,
        rhs: &F,
        t: T,
        y: &State4<T>,
        k1: &State4<T>,
        h: T,
        t_new: T,
        tol: &Tolerance<T>,
    ) -> Trial<T>
    where
        F: Fn(T, &State4<T>) -> State4<T>,
    {
        let (a, c) = (self, &self.c);
        let k2 = rhs(t + c[0] * h, &axpy(y, h, &[(a.a2[0], k1)]));
        let k3 = rhs(t + c[1] * h, &axpy(y, h, &[(a.a3[0], k1), (a.a3[1], &k2)]));
        let k4 = rhs(t + c[2] * h, &axpy(y, h, &[(a.a4[0], k1), (a.a4[1], &k3)]));
        let k5 = rhs(
            t + c[3] * h,
            &axpy(y, h, &[(a.a5[0], k1), (a.a5[1], &k3), (a.a5[2], &k4)]),
        );
        let k6 = rhs(
            t + c[4] * h,
            &axpy(y, h, &[(a.a6[0], k1), (a.a6[1], &k4), (a.a6[2], &k5)]),
        );
        let k7 = rhs(
            t + c[5] * h,
            &axpy(y, h, &[(a.a7[0], k1), (a.a7[1], &k4), (a.a7[2], &k5), (a.a7[3], &k6)]),
        );
        let k8 = rhs(
            t + c[6] * h,
            &axpy(
                y,
                h,
                &[(a.a8[0], k1), (a.a8[1], &k4), (a.a8[2], &k5), (a.a8[3], &k6), (a.a8[4], &k7)],
            ),
        );
        let k9 = rhs(
            t + c[7] * h,
            &axpy(
                y,
                h,
                &[
                    (a.a9[0], k1),
                    (a.a9[1], &k4),
                    (a.a9[2], &k5),
                    (a.a9[3], &k6),
                    (a.a9[4], &k7),
                    (a.a9[5], &k8),
                ],
            ),
        );
        let k10 = rhs(
            t + c[8] * h,
            &axpy(
                y,
                h,
                &[
                    (a.a10[0], k1),
                    (a.a10[1], &k4),
                    (a.a10[2], &k5),
                    (a.a10[3], &k6),
                    (a.a10[4], &k7),
                    (a.a10[5], &k8),
                    (a.a10[6], &k9),
                ],
            ),
        );
        let k11 = rhs(
            t + c[9] * h,
            &axpy(
                y,
                h,
                &[
                    (a.a11[0], k1),
                    (a.a11[1], &k4),
                    (a.a11[2], &k5),
                    (a.a11[3], &k6),
                    (a.a11[4], &k7),
                    (a.a11[5], &k8),
                    (a.a11[6], &k9),
                    (a.a11[7], &k10),
                ],
            ),
        );
        let k12 = rhs(
            t_new,
            &axpy(
                y,
                h,
                &[
                    (a.a12[0], k1),
                    (a.a12[1], &k4),
                    (a.a12[2], &k5),
                    (a.a12[3], &k6),
                    (a.a12[4], &k7),
                    (a.a12[5], &k8),
                    (a.a12[6], &k9),
                    (a.a12[7], &k10),
                    (a.a12[8], &k11),
                ],
            ),
        );
        let b = &self.b;
        let mut slope = [T::zero(); 4];
        for i in 0..4 {
            slope[i] = b[0] * k1[i]
                + b[1] * k6[i]
                + b[2] * k7[i]
                + b[3] * k8[i]
                + b[4] * k9[i]
                + b[5] * k10[i]
                + b[6] * k11[i]
                + b[7] * k12[i];
        }
        let y_new = axpy(y, h, &[(T::one(), &slope)]);

        let (er, bhh) = (&self.er, &self.bhh);
        let (mut err5, mut err3) = (T::zero(), T::zero());
        for i in 0..4 {
            let sk = scale(y, &y_new, i, tol.rtol, tol.atol);
            let e3 = slope[i] - bhh[0] * k1[i] - bhh[1] * k9[i] - bhh[2] * k12[i];
            let e5 = er[0] * k1[i]
                + er[1] * k6[i]
                + er[2] * k7[i]
                + er[3] * k8[i]
                + er[4] * k9[i]
                + er[5] * k10[i]
                + er[6] * k11[i]
                + er[7] * k12[i];
            err3 = err3 + (e3 / sk) * (e3 / sk);
            err5 = err5 + (e5 / sk) * (e5 / sk);
        }
        let mut deno = err5 + T::lit(0.01) * err3;
        if deno <= T::zero() {
            deno = T::one();
        }
        let err = h.abs() * err5 * (T::one() / (deno * T::lit(4.0))).sqrt();
        let k_end = rhs(t_new, &y_new);
        Trial { y: y_new, k_end, err }
    }
}

/// Proportional-integral step-size controller.
pub(crate) struct PiController<T> {
    expo: T,
    beta: T,
    safety: T,
    fac_min_inv: T,
    fac_max_inv: T,
    err_old: T,
    rejected_last: bool,
}

impl<T: Real> PiController<T> {
    /// `order` is the order of the propagated solution; step ratios are kept
    /// within `[fac_min, fac_max]`.
    pub fn new(order: f64, fac_min: f64, fac_max: f64) -> Self {
        let beta = 0.04;
        Self {
            expo: T::lit(1.0 / order - 0.75 * beta),
            beta: T::lit(beta),
            safety: T::lit(0.9),
            fac_min_inv: T::lit(1.0 / fac_min),
            fac_max_inv: T::lit(1.0 / fac_max),
            err_old: T::lit(1e-4),
            rejected_last: false,
        }
    }

    /// Accept/reject decision and the next step size.
    pub fn decide(&mut self, err: T, h: T) -> (bool, T) {
        let fac11 = err.powf(self.expo);
        if err <= T::one() {
            let fac = fac11 / self.err_old.powf(self.beta);
            let fac = self.fac_max_inv.max(self.fac_min_inv.min(fac / self.safety));
            let mut h_new = h / fac;
            if self.rejected_last {
                h_new = h_new.min(h);
            }
            self.err_old = err.max(T::lit(1e-4));
            self.rejected_last = false;
            (true, h_new)
        } else {
            self.rejected_last = true;
            (false, h / self.fac_min_inv.min(fac11 / self.safety))
        }
    }
}
