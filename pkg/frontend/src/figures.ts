/**
 * The four figure kinds, all reading the frozen CSV schemas and emitting
 * deterministic SVG: capacity-density profiles, partial Wiener sums,
 * oscillation decay traces with their fitted envelope, and the log-log
 * capacity scaling fit.
 */

import { numbers, parseCsv, requireColumns, Table } from './csv'
import { leastSquares } from './fit'
import { Figure, HEIGHT, linScale, MARGIN, PALETTE, WIDTH } from './svg'

export type FigureKind = 'delta-profile' | 'wiener-sum' | 'decay-trace' | 'scaling-fit'

export const FIGURE_KINDS: FigureKind[] = [
  'delta-profile',
  'wiener-sum',
  'decay-trace',
  'scaling-fit',
]

const PLOT_X0 = MARGIN.left
const PLOT_X1 = WIDTH - MARGIN.right
const PLOT_Y0 = HEIGHT - MARGIN.bottom
const PLOT_Y1 = MARGIN.top

interface Group {
  label: string
  rows: Record<string, string>[]
}

function groupBy(tables: Table[], keys: string[]): Group[] {
  const groups = new Map<string, Record<string, string>[]>()
  for (const table of tables) {
    for (const row of table.rows) {
      const label = keys.map((k) => `${k}=${row[k]}`).join(' ')
      if (!groups.has(label)) groups.set(label, [])
      groups.get(label)!.push(row)
    }
  }
  return [...groups.entries()].map(([label, rows]) => ({ label, rows }))
}

export function renderDeltaProfile(tables: Table[]): string {
  tables.forEach((t) => requireColumns(t, ['scenario', 's', 'r', 'delta'], 'delta-profile'))
  const fig = new Figure('Capacity density of the complement')
  const allR = tables.flatMap((t) => numbers(t, 'r')).map(Math.log10)
  const x = linScale(Math.min(...allR), Math.max(...allR), PLOT_X0, PLOT_X1)
  const y = linScale(0, 1.05, PLOT_Y0, PLOT_Y1)
  fig.axes(x, y, 'log10 r', 'delta_s(r)')
  const groups = groupBy(tables, ['scenario', 's'])
  groups.forEach((g, i) => {
    const xs = g.rows.map((r) => Math.log10(Number(r.r)))
    const ys = g.rows.map((r) => Number(r.delta))
    fig.polyline(xs, ys, x, y, PALETTE[i % PALETTE.length])
    fig.dots(xs, ys, x, y, PALETTE[i % PALETTE.length])
  })
  fig.legend(groups.map((g, i) => ({ label: g.label, color: PALETTE[i % PALETTE.length] })))
  return fig.render()
}

export function renderWienerSum(tables: Table[]): string {
  tables.forEach((t) => requireColumns(t, ['scenario', 's', 'r', 'partial_sum'], 'wiener-sum'))
  const fig = new Figure('Partial Wiener sums over dyadic radii')
  const groups = groupBy(tables, ['scenario', 's'])
  const maxLen = Math.max(...groups.map((g) => g.rows.length))
  const maxSum = Math.max(...tables.flatMap((t) => numbers(t, 'partial_sum')))
  const x = linScale(0, Math.max(maxLen - 1, 1), PLOT_X0, PLOT_X1)
  const y = linScale(0, maxSum * 1.05 || 1, PLOT_Y0, PLOT_Y1)
  fig.axes(x, y, 'dyadic level j', 'S_j')
  groups.forEach((g, i) => {
    const xs = g.rows.map((_, j) => j)
    const ys = g.rows.map((r) => Number(r.partial_sum))
    fig.polyline(xs, ys, x, y, PALETTE[i % PALETTE.length])
    fig.dots(xs, ys, x, y, PALETTE[i % PALETTE.length])
  })
  fig.legend(groups.map((g, i) => ({ label: g.label, color: PALETTE[i % PALETTE.length] })))
  return fig.render()
}

export function renderDecayTrace(tables: Table[]): string {
  const table = tables[0]
  requireColumns(
    table,
    ['scenario', 'mode', 'rho', 'osc', 'wiener_integral', 'datum_osc', 'rhs'],
    'decay-trace',
  )
  const osc = numbers(table, 'osc')
  const wi = numbers(table, 'wiener_integral')
  const datumOsc = Number(table.rows[0].datum_osc)
  const maxOsc = Math.max(...osc)
  const floor = Math.max(maxOsc * 1e-4, 1e-12)
  const logOsc = osc.map((v) => Math.log10(Math.max(v, floor)))
  // envelope from the fitted decay law on the excess over the datum
  const usable = osc
    .map((v, i) => [v - datumOsc, wi[i]] as const)
    .filter(([e]) => e > floor)
  let slope = 0
  let intercept = Math.log(Math.max(datumOsc, floor))
  if (usable.length >= 2) {
    const fit = leastSquares(
      usable.map(([, w]) => w),
      usable.map(([e]) => Math.log(e)),
    )
    slope = -fit.slope
    intercept = fit.intercept
  }
  const envelope = wi.map((w) =>
    Math.log10(Math.max(Math.exp(intercept - slope * w) + datumOsc, floor)),
  )
  const fig = new Figure(`Oscillation decay (${table.rows[0].scenario}, ${table.rows[0].mode}-mode)`)
  const ysAll = logOsc.concat(envelope)
  const x = linScale(Math.min(...wi), Math.max(...wi) || 1, PLOT_X0, PLOT_X1)
  const y = linScale(Math.min(...ysAll) - 0.2, Math.max(...ysAll) + 0.2, PLOT_Y0, PLOT_Y1)
  fig.axes(x, y, 'Wiener integral to rho0', 'log10 osc')
  fig.polyline(wi, logOsc, x, y, PALETTE[0])
  fig.dots(wi, logOsc, x, y, PALETTE[0])
  fig.polyline(wi, envelope, x, y, PALETTE[1], true)
  fig.legend([
    { label: 'measured osc', color: PALETTE[0] },
    { label: 'fitted envelope', color: PALETTE[1] },
  ])
  fig.note(`decay slope = ${slope.toFixed(4)}`)
  fig.note(`datum osc = ${datumOsc.toPrecision(4)}`, 1)
  return fig.render()
}

export function renderScalingFit(tables: Table[]): string {
  const table = tables[0]
  requireColumns(table, ['s', 'r', 'capacity_den'], 'scaling-fit')
  const lnR = numbers(table, 'r').map(Math.log)
  const lnC = numbers(table, 'capacity_den').map(Math.log)
  const fit = leastSquares(lnR, lnC)
  const fig = new Figure('Capacity of the full ball against the radius')
  const x = linScale(Math.min(...lnR), Math.max(...lnR), PLOT_X0, PLOT_X1)
  const y = linScale(Math.min(...lnC), Math.max(...lnC), PLOT_Y0, PLOT_Y1)
  fig.axes(x, y, 'ln r', 'ln C_s(B_r; B_2r)')
  fig.dots(lnR, lnC, x, y, PALETTE[0])
  const xsLine = [Math.min(...lnR), Math.max(...lnR)]
  fig.polyline(
    xsLine,
    xsLine.map((v) => fit.intercept + fit.slope * v),
    x,
    y,
    PALETTE[1],
    true,
  )
  fig.note(`slope = ${fit.slope.toFixed(4)}`)
  fig.note(`s = ${table.rows[0].s}`, 1)
  return fig.render()
}

const RENDERERS: Record<FigureKind, (tables: Table[]) => string> = {
  'delta-profile': renderDeltaProfile,
  'wiener-sum': renderWienerSum,
  'decay-trace': renderDecayTrace,
  'scaling-fit': renderScalingFit,
}

export function render(kind: string, csvPaths: string[]): string {
  if (!(kind in RENDERERS)) {
    throw new Error(`unknown figure kind '${kind}' (choose from ${FIGURE_KINDS.join(', ')})`)
  }
  if (csvPaths.length === 0) throw new Error('no input CSV given')
  const tables = csvPaths.map(parseCsv)
  return RENDERERS[kind as FigureKind](tables)
}
