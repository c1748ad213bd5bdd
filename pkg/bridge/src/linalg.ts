/** Dense helpers on plain number arrays; everything here is row-major. */

export function zeros(n: number): number[] {
  return new Array<number>(n).fill(0);
}

export function zeroMatrix(rows: number, cols: number): number[][] {
  return Array.from({ length: rows }, () => zeros(cols));
}

export function dot(a: number[], b: number[]): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i] * b[i];
  return s;
}

/** a: n x k, b: k x m. */
export function matmul(a: number[][], b: number[][]): number[][] {
  const n = a.length;
  const k = b.length;
  const m = b[0].length;
  const out = zeroMatrix(n, m);
  for (let i = 0; i < n; i++) {
    const row = a[i];
    const outRow = out[i];
    for (let p = 0; p < k; p++) {
      const aip = row[p];
      if (aip === 0) continue;
      const bRow = b[p];
      for (let j = 0; j < m; j++) outRow[j] += aip * bRow[j];
    }
  }
  return out;
}

/** Row vector times matrix: x (len k) . w (k x m) -> len m. */
export function vecmat(x: number[], w: number[][]): number[] {
  const m = w[0].length;
  const out = zeros(m);
  for (let p = 0; p < x.length; p++) {
    const xp = x[p];
    if (xp === 0) continue;
    const row = w[p];
    for (let j = 0; j < m; j++) out[j] += xp * row[j];
  }
  return out;
}

/** Numerically shifted softmax, returns a fresh array. */
export function softmax(row: number[]): number[] {
  let peak = -Infinity;
  for (const v of row) if (v > peak) peak = v;
  const exps = row.map((v) => Math.exp(v - peak));
  let sum = 0;
  for (const e of exps) sum += e;
  return exps.map((e) => e / sum);
}

export function layerNorm(x: number[], gamma: number[], beta: number[], eps = 1e-5): number[] {
  const n = x.length;
  let mean = 0;
  for (const v of x) mean += v;
  mean /= n;
  let variance = 0;
  for (const v of x) variance += (v - mean) * (v - mean);
  variance /= n;
  const inv = 1 / Math.sqrt(variance + eps);
  return x.map((v, i) => (v - mean) * inv * gamma[i] + beta[i]);
}

export function relu(x: number[]): number[] {
  return x.map((v) => (v > 0 ? v : 0));
}

/**
 * Solve a x = b by Gaussian elimination with partial pivoting.
 * Mutates copies only; a must be square and well enough conditioned,
 * which the ridge term in the one caller guarantees.
 */
export function solveLinear(a: number[][], b: number[]): number[] {
  const n = a.length;
  const m = a.map((row, i) => [...row, b[i]]);
  for (let col = 0; col < n; col++) {
    let pivot = col;
    for (let r = col + 1; r < n; r++) {
      if (Math.abs(m[r][col]) > Math.abs(m[pivot][col])) pivot = r;
    }
    if (Math.abs(m[pivot][col]) < 1e-12) {
      throw new Error("singular system in least-squares solve");
    }
    if (pivot !== col) {
      const tmp = m[col];
      m[col] = m[pivot];
      m[pivot] = tmp;
    }
    const lead = m[col][col];
    for (let r = col + 1; r < n; r++) {
      const factor = m[r][col] / lead;
      if (factor === 0) continue;
      for (let c = col; c <= n; c++) m[r][c] -= factor * m[col][c];
    }
  }
  const x = zeros(n);
  for (let r = n - 1; r >= 0; r--) {
    let s = m[r][n];
    for (let c = r + 1; c < n; c++) s -= m[r][c] * x[c];
    x[r] = s / m[r][r];
  }
  return x;
}
