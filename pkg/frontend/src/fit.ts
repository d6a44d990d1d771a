/** Plain least-squares line fit; shared by the scaling and decay figures. */

export interface LineFit {
  slope: number
  intercept: number
}

export function leastSquares(xs: number[], ys: number[]): LineFit {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error(`line fit needs two or more paired points, got ${xs.length}`)
  }
  const n = xs.length
  const mx = xs.reduce((a, b) => a + b, 0) / n
  const my = ys.reduce((a, b) => a + b, 0) / n
  let sxx = 0
  let sxy = 0
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) * (xs[i] - mx)
    sxy += (xs[i] - mx) * (ys[i] - my)
  }
  if (sxx === 0) return { slope: 0, intercept: my }
  const slope = sxy / sxx
  return { slope, intercept: my - slope * mx }
}
