/**
 * Minimal deterministic SVG builder: fixed canvas, fixed styles, no
 * timestamps, stable number formatting. Re-rendering identical inputs
 * yields byte-identical output.
 */

export const WIDTH = 640
export const HEIGHT = 420
export const MARGIN = { left: 70, right: 20, top: 36, bottom: 48 }

export function fmt(x: number): string {
  if (x === 0) return '0'
  const s = x.toPrecision(6)
  return s.includes('e') ? s : s.replace(/\.?0+$/, '')
}

export interface Scale {
  (v: number): number
  lo: number
  hi: number
}

export function linScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1
  const f = ((v: number) => outLo + ((v - lo) / span) * (outHi - outLo)) as Scale
  f.lo = lo
  f.hi = hi
  return f
}

export function ticks(lo: number, hi: number, n = 5): number[] {
  const out: number[] = []
  for (let i = 0; i <= n; i++) out.push(lo + ((hi - lo) * i) / n)
  return out
}

export class Figure {
  private parts: string[] = []

  constructor(title: string) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
        `font-family="Helvetica, Arial, sans-serif" font-size="12">`,
      `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="15">${esc(title)}</text>`,
    )
  }

  axes(x: Scale, y: Scale, xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left
    const x1 = WIDTH - MARGIN.right
    const y0 = HEIGHT - MARGIN.bottom
    const y1 = MARGIN.top
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    )
    for (const t of ticks(x.lo, x.hi)) {
      const px = fmt(x(t))
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="black"/>`,
        `<text x="${px}" y="${y0 + 17}" text-anchor="middle" font-size="10">${fmt(t)}</text>`,
      )
    }
    for (const t of ticks(y.lo, y.hi)) {
      const py = fmt(y(t))
      this.parts.push(
        `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`,
        `<text x="${x0 - 7}" y="${py}" text-anchor="end" dominant-baseline="middle" font-size="10">${fmt(t)}</text>`,
      )
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 10}" text-anchor="middle">${esc(xLabel)}</text>`,
      `<text x="16" y="${(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 16 ${(y0 + y1) / 2})">${esc(yLabel)}</text>`,
    )
  }

  polyline(xs: number[], ys: number[], x: Scale, y: Scale, color: string, dashed = false): void {
    const pts = xs.map((v, i) => `${fmt(x(v))},${fmt(y(ys[i]))}`).join(' ')
    const dash = dashed ? ' stroke-dasharray="6 4"' : ''
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"${dash}/>`)
  }

  dots(xs: number[], ys: number[], x: Scale, y: Scale, color: string): void {
    for (let i = 0; i < xs.length; i++) {
      this.parts.push(`<circle cx="${fmt(x(xs[i]))}" cy="${fmt(y(ys[i]))}" r="3" fill="${color}"/>`)
    }
  }

  note(text: string, line = 0): void {
    this.parts.push(
      `<text x="${WIDTH - MARGIN.right}" y="${MARGIN.top + 14 + 16 * line}" text-anchor="end" font-size="12">${esc(text)}</text>`,
    )
  }

  legend(labels: { label: string; color: string }[]): void {
    labels.forEach(({ label, color }, i) => {
      const y = MARGIN.top + 14 + 16 * i
      this.parts.push(
        `<line x1="${MARGIN.left + 8}" y1="${y - 4}" x2="${MARGIN.left + 32}" y2="${y - 4}" stroke="${color}" stroke-width="2"/>`,
        `<text x="${MARGIN.left + 38}" y="${y}" font-size="11">${esc(label)}</text>`,
      )
    })
  }

  render(): string {
    return this.parts.join('\n') + '\n</svg>\n'
  }
}

function esc(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}

export const PALETTE = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']
