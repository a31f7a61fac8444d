/// Index layout of a bus's local variable vector:
/// `pg, qg, p, q, i_re, i_im, v_re[n], v_im[n], li_re[n-1], li_im[n-1], lp[n-1], lq[n-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    /// `|N_k|`.
    pub n: usize,
}

impl Layout {
    pub const PG: usize = 0;
    pub const QG: usize = 1;
    pub const P: usize = 2;
    pub const Q: usize = 3;
    pub const I_RE: usize = 4;
    pub const I_IM: usize = 5;

    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a bus always holds its own voltage");
        Self { n }
    }

    pub fn len(&self) -> usize {
        6 + 2 * self.n + 4 * self.lines()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lines(&self) -> usize {
        self.n - 1
    }

    pub fn v_re(&self, r: usize) -> usize {
        6 + r
    }

    pub fn v_im(&self, r: usize) -> usize {
        6 + self.n + r
    }

    pub fn li_re(&self, r: usize) -> usize {
        6 + 2 * self.n + r
    }

    pub fn li_im(&self, r: usize) -> usize {
        6 + 2 * self.n + self.lines() + r
    }

    pub fn lp(&self, r: usize) -> usize {
        6 + 2 * self.n + 2 * self.lines() + r
    }

    pub fn lq(&self, r: usize) -> usize {
        6 + 2 * self.n + 3 * self.lines() + r
    }

    /// Position of voltage component `j` in the stacked `[v_re; v_im]`.
    pub fn v_stacked(&self, j: usize) -> usize {
        6 + j
    }
}

/// Values of the local variables of one bus.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVars {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl LocalVars {
    pub fn zeros(n: usize) -> Self {
        let layout = Layout::new(n);
        Self {
            layout,
            data: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        let layout = Layout::new(n);
        assert_eq!(data.len(), layout.len());
        Self { layout, data }
    }

    pub fn pg(&self) -> f64 {
        self.data[Layout::PG]
    }

    pub fn qg(&self) -> f64 {
        self.data[Layout::QG]
    }

    pub fn p(&self) -> f64 {
        self.data[Layout::P]
    }

    pub fn q(&self) -> f64 {
        self.data[Layout::Q]
    }

    pub fn i_re(&self) -> f64 {
        self.data[Layout::I_RE]
    }

    pub fn i_im(&self) -> f64 {
        self.data[Layout::I_IM]
    }

    pub fn v_re(&self) -> &[f64] {
        let n = self.layout.n;
        &self.data[6..6 + n]
    }

    pub fn v_im(&self) -> &[f64] {
        let n = self.layout.n;
        &self.data[6 + n..6 + 2 * n]
    }

    /// `[v_re; v_im]`, the part coupled to the net variables.
    pub fn v(&self) -> &[f64] {
        &self.data[6..6 + 2 * self.layout.n]
    }

    pub fn li_re(&self) -> &[f64] {
        self.block(self.layout.li_re(0))
    }

    pub fn li_im(&self) -> &[f64] {
        self.block(self.layout.li_im(0))
    }

    pub fn lp(&self) -> &[f64] {
        self.block(self.layout.lp(0))
    }

    pub fn lq(&self) -> &[f64] {
        self.block(self.layout.lq(0))
    }

    fn block(&self, start: usize) -> &[f64] {
        &self.data[start..start + self.layout.lines()]
    }

    pub fn set(&mut self, index: usize, value: f64) {
        self.data[index] = value;
    }
}
