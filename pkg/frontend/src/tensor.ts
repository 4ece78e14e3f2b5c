/**
 * Minimal float64 reverse-mode autodiff over 2D tensors.
 *
 * Every operation records its backward closure on a Tape; calling
 * `tape.backward(loss)` replays the closures in reverse. Float64 is the
 * point: finite-difference gradient checks at 1e-4 relative tolerance
 * are not reachable in float32.
 */

import { Rng } from "./rng.js";

export class Tensor {
  readonly rows: number;
  readonly cols: number;
  data: Float64Array;
  grad: Float64Array;

  constructor(rows: number, cols: number, data?: Float64Array) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float64Array(rows * cols);
    this.grad = new Float64Array(rows * cols);
    if (this.data.length !== rows * cols) {
      throw new Error(`data length ${this.data.length} != ${rows}x${cols}`);
    }
  }

  get size(): number {
    return this.rows * this.cols;
  }

  at(r: number, c: number): number {
    return this.data[r * this.cols + c]!;
  }

  zeroGrad(): void {
    this.grad.fill(0);
  }

  static gaussian(rows: number, cols: number, std: number, rng: Rng): Tensor {
    const t = new Tensor(rows, cols);
    for (let i = 0; i < t.data.length; i++) t.data[i] = std * rng.gauss();
    return t;
  }

  static scalar(v: number): Tensor {
    const t = new Tensor(1, 1);
    t.data[0] = v;
    return t;
  }
}

export class Tape {
  private steps: Array<() => void> = [];

  record(back: () => void): void {
    this.steps.push(back);
  }

  reset(): void {
    this.steps.length = 0;
  }

  backward(loss: Tensor): void {
    if (loss.size !== 1) throw new Error("backward expects a scalar loss");
    loss.grad[0] = 1;
    for (let i = this.steps.length - 1; i >= 0; i--) this.steps[i]!();
  }

  /** a[m,k] @ b[k,n] -> [m,n] */
  matmul(a: Tensor, b: Tensor): Tensor {
    if (a.cols !== b.rows) throw new Error("matmul shape mismatch");
    const out = new Tensor(a.rows, b.cols);
    const { rows: m, cols: k } = a;
    const n = b.cols;
    for (let i = 0; i < m; i++) {
      for (let p = 0; p < k; p++) {
        const av = a.data[i * k + p]!;
        if (av === 0) continue;
        for (let j = 0; j < n; j++) {
          out.data[i * n + j]! += av * b.data[p * n + j]!;
        }
      }
    }
    this.record(() => {
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          const g = out.grad[i * n + j]!;
          if (g === 0) continue;
          for (let p = 0; p < k; p++) {
            a.grad[i * k + p]! += g * b.data[p * n + j]!;
            b.grad[p * n + j]! += g * a.data[i * k + p]!;
          }
        }
      }
    });
    return out;
  }

  /** a[m,k] @ b[n,k]^T -> [m,n] */
  matmulT(a: Tensor, b: Tensor): Tensor {
    if (a.cols !== b.cols) throw new Error("matmulT shape mismatch");
    const out = new Tensor(a.rows, b.rows);
    const { rows: m, cols: k } = a;
    const n = b.rows;
    for (let i = 0; i < m; i++) {
      for (let j = 0; j < n; j++) {
        let s = 0;
        for (let p = 0; p < k; p++) s += a.data[i * k + p]! * b.data[j * k + p]!;
        out.data[i * n + j] = s;
      }
    }
    this.record(() => {
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          const g = out.grad[i * n + j]!;
          if (g === 0) continue;
          for (let p = 0; p < k; p++) {
            a.grad[i * k + p]! += g * b.data[j * k + p]!;
            b.grad[j * k + p]! += g * a.data[i * k + p]!;
          }
        }
      }
    });
    return out;
  }

  add(a: Tensor, b: Tensor): Tensor {
    if (a.size !== b.size) throw new Error("add shape mismatch");
    const out = new Tensor(a.rows, a.cols);
    for (let i = 0; i < out.size; i++) out.data[i] = a.data[i]! + b.data[i]!;
    this.record(() => {
      for (let i = 0; i < out.size; i++) {
        a.grad[i]! += out.grad[i]!;
        b.grad[i]! += out.grad[i]!;
      }
    });
    return out;
  }

  sub(a: Tensor, b: Tensor): Tensor {
    return this.add(a, this.scale(b, -1));
  }

  scale(a: Tensor, factor: number): Tensor {
    const out = new Tensor(a.rows, a.cols);
    for (let i = 0; i < out.size; i++) out.data[i] = factor * a.data[i]!;
    this.record(() => {
      for (let i = 0; i < out.size; i++) a.grad[i]! += factor * out.grad[i]!;
    });
    return out;
  }

  addScalar(a: Tensor, v: number): Tensor {
    const out = new Tensor(a.rows, a.cols);
    for (let i = 0; i < out.size; i++) out.data[i] = a.data[i]! + v;
    this.record(() => {
      for (let i = 0; i < out.size; i++) a.grad[i]! += out.grad[i]!;
    });
    return out;
  }

  /** Broadcast a [1,n] bias over every row of a [m,n] tensor. */
  addRow(a: Tensor, bias: Tensor): Tensor {
    if (bias.rows !== 1 || bias.cols !== a.cols) throw new Error("addRow shape");
    const out = new Tensor(a.rows, a.cols);
    for (let i = 0; i < a.rows; i++) {
      for (let j = 0; j < a.cols; j++) {
        out.data[i * a.cols + j] = a.data[i * a.cols + j]! + bias.data[j]!;
      }
    }
    this.record(() => {
      for (let i = 0; i < a.rows; i++) {
        for (let j = 0; j < a.cols; j++) {
          const g = out.grad[i * a.cols + j]!;
          a.grad[i * a.cols + j]! += g;
          bias.grad[j]! += g;
        }
      }
    });
    return out;
  }

  relu(a: Tensor): Tensor {
    const out = new Tensor(a.rows, a.cols);
    for (let i = 0; i < out.size; i++) out.data[i] = Math.max(0, a.data[i]!);
    this.record(() => {
      for (let i = 0; i < out.size; i++) {
        if (a.data[i]! > 0) a.grad[i]! += out.grad[i]!;
      }
    });
    return out;
  }

  softmaxRows(a: Tensor): Tensor {
    const out = new Tensor(a.rows, a.cols);
    const n = a.cols;
    for (let i = 0; i < a.rows; i++) {
      let max = -Infinity;
      for (let j = 0; j < n; j++) max = Math.max(max, a.data[i * n + j]!);
      let z = 0;
      for (let j = 0; j < n; j++) {
        const e = Math.exp(a.data[i * n + j]! - max);
        out.data[i * n + j] = e;
        z += e;
      }
      for (let j = 0; j < n; j++) out.data[i * n + j]! /= z;
    }
    this.record(() => {
      for (let i = 0; i < a.rows; i++) {
        let dot = 0;
        for (let j = 0; j < n; j++) {
          dot += out.grad[i * n + j]! * out.data[i * n + j]!;
        }
        for (let j = 0; j < n; j++) {
          a.grad[i * n + j]! +=
            out.data[i * n + j]! * (out.grad[i * n + j]! - dot);
        }
      }
    });
    return out;
  }

  /** table[V,d] rows selected by ids -> [ids.length, d]; scatter-add backward. */
  gatherRows(table: Tensor, ids: number[]): Tensor {
    const d = table.cols;
    const out = new Tensor(ids.length, d);
    for (let i = 0; i < ids.length; i++) {
      out.data.set(table.data.subarray(ids[i]! * d, (ids[i]! + 1) * d), i * d);
    }
    this.record(() => {
      for (let i = 0; i < ids.length; i++) {
        for (let j = 0; j < d; j++) {
          table.grad[ids[i]! * d + j]! += out.grad[i * d + j]!;
        }
      }
    });
    return out;
  }

  pickRow(a: Tensor, row: number): Tensor {
    const out = new Tensor(1, a.cols);
    out.data.set(a.data.subarray(row * a.cols, (row + 1) * a.cols));
    this.record(() => {
      for (let j = 0; j < a.cols; j++) a.grad[row * a.cols + j]! += out.grad[j]!;
    });
    return out;
  }

  concatCols(parts: Tensor[]): Tensor {
    const rows = parts[0]!.rows;
    const cols = parts.reduce((s, p) => s + p.cols, 0);
    const out = new Tensor(rows, cols);
    let off = 0;
    for (const p of parts) {
      if (p.rows !== rows) throw new Error("concatCols row mismatch");
      for (let i = 0; i < rows; i++) {
        out.data.set(p.data.subarray(i * p.cols, (i + 1) * p.cols), i * cols + off);
      }
      off += p.cols;
    }
    this.record(() => {
      let o = 0;
      for (const p of parts) {
        for (let i = 0; i < rows; i++) {
          for (let j = 0; j < p.cols; j++) {
            p.grad[i * p.cols + j]! += out.grad[i * cols + o + j]!;
          }
        }
        o += p.cols;
      }
    });
    return out;
  }

  /** Mean negative log-likelihood of `targets` under row-wise softmax of
   * logits; fused forward/backward. */
  meanNll(logits: Tensor, targets: number[]): Tensor {
    if (targets.length !== logits.rows) throw new Error("meanNll shape");
    const m = logits.rows;
    const n = logits.cols;
    const probs = new Float64Array(m * n);
    let loss = 0;
    for (let i = 0; i < m; i++) {
      let max = -Infinity;
      for (let j = 0; j < n; j++) max = Math.max(max, logits.data[i * n + j]!);
      let z = 0;
      for (let j = 0; j < n; j++) {
        const e = Math.exp(logits.data[i * n + j]! - max);
        probs[i * n + j] = e;
        z += e;
      }
      for (let j = 0; j < n; j++) probs[i * n + j]! /= z;
      loss -= Math.log(probs[i * n + targets[i]!]!);
    }
    const out = Tensor.scalar(loss / m);
    this.record(() => {
      const g = out.grad[0]! / m;
      for (let i = 0; i < m; i++) {
        for (let j = 0; j < n; j++) {
          logits.grad[i * n + j]! +=
            g * (probs[i * n + j]! - (j === targets[i] ? 1 : 0));
        }
      }
    });
    return out;
  }

  mean(a: Tensor): Tensor {
    let s = 0;
    for (let i = 0; i < a.size; i++) s += a.data[i]!;
    const out = Tensor.scalar(s / a.size);
    this.record(() => {
      const g = out.grad[0]! / a.size;
      for (let i = 0; i < a.size; i++) a.grad[i]! += g;
    });
    return out;
  }
}

export class Adam {
  private m: Float64Array[];
  private v: Float64Array[];
  private t = 0;

  constructor(
    private params: Tensor[],
    private lr: number,
    private beta1 = 0.9,
    private beta2 = 0.999,
    private eps = 1e-8,
  ) {
    this.m = params.map((p) => new Float64Array(p.size));
    this.v = params.map((p) => new Float64Array(p.size));
  }

  step(): void {
    this.t += 1;
    const c1 = 1 - Math.pow(this.beta1, this.t);
    const c2 = 1 - Math.pow(this.beta2, this.t);
    for (let k = 0; k < this.params.length; k++) {
      const p = this.params[k]!;
      const m = this.m[k]!;
      const v = this.v[k]!;
      for (let i = 0; i < p.size; i++) {
        const g = p.grad[i]!;
        m[i] = this.beta1 * m[i]! + (1 - this.beta1) * g;
        v[i] = this.beta2 * v[i]! + (1 - this.beta2) * g * g;
        p.data[i]! -= (this.lr * (m[i]! / c1)) / (Math.sqrt(v[i]! / c2) + this.eps);
      }
    }
  }

  zeroGrad(): void {
    for (const p of this.params) p.zeroGrad();
  }
}
