/** Synthetic CSV fixtures conforming to the harness schema. */

export const HEADER =
  "case,method,P,Q,mesh,sample_index,time,metric_name,metric_value";

export function convergenceCsv(methods: string[], orders: number[]): string {
  const lines = [HEADER];
  const grids = [9, 15, 21, 27];
  for (const method of methods) {
    for (const p of orders) {
      grids.forEach((n, i) => {
        const q = method === "p2p" ? 2 * p + 2 : p + 2;
        const mesh =
          method === "conformal"
            ? `${n}x${n}`
            : `${n / 3}+${n / 3}+${n / 3}x${n}~s0.5`;
        const err = 0.5 * Math.pow(9 / n, p + 1) * (1 + 0.03 * orders.indexOf(p));
        lines.push(
          `convergence,${method},${p},${q},${mesh},0,1.0,l2_error,${err.toExponential(12)}`,
        );
      });
    }
  }
  return lines.join("\n") + "\n";
}

export function decayCsv(): string {
  const lines = [HEADER];
  for (const method of ["conformal", "mortar", "p2p"]) {
    for (let cycle = 0; cycle <= 10; cycle++) {
      const peak = Math.exp(-0.08 * cycle * (method === "p2p" ? 0.9 : 1.0));
      lines.push(
        `gaussian,${method},4,6,16x16,${cycle},${(cycle * 6.283).toFixed(3)},linf_peak,${peak.toFixed(8)}`,
      );
    }
  }
  return lines.join("\n") + "\n";
}

export function historyCsv(): string {
  const lines = [HEADER];
  for (let k = 0; k <= 20; k++) {
    const t = k;
    lines.push(
      `vortex,mortar,5,12,7+7+7x21~s0.5,${k},${t.toFixed(1)},l2_rho_error,${(1e-4 * (1 + 0.05 * k)).toExponential(8)}`,
    );
  }
  return lines.join("\n") + "\n";
}
