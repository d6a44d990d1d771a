/**
 * Reader for the pipeline CSVs: a `#`-comment metadata block, one header
 * row, then data rows. Schemas are frozen on the producer side; consumers
 * validate by column name and fail loudly on mismatch.
 */

import { readFileSync } from 'fs'

export interface Table {
  meta: Record<string, string>
  columns: string[]
  rows: Record<string, string>[]
  path: string
}

export function parseCsv(path: string): Table {
  const text = readFileSync(path, 'utf8')
  const meta: Record<string, string> = {}
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0)
  let header: string[] | null = null
  const rows: Record<string, string>[] = []
  for (const line of lines) {
    if (line.startsWith('#')) {
      const m = line.slice(1).trim()
      const ix = m.indexOf(':')
      if (ix > 0) meta[m.slice(0, ix).trim()] = m.slice(ix + 1).trim()
      continue
    }
    const cells = line.split(',')
    if (header === null) {
      header = cells
      continue
    }
    if (cells[0] === 'FAILED') continue // partial output marker
    const row: Record<string, string> = {}
    header.forEach((c, i) => (row[c] = cells[i] ?? ''))
    rows.push(row)
  }
  if (header === null) throw new Error(`${path}: no header row`)
  return { meta, columns: header, rows, path }
}

export function requireColumns(table: Table, needed: string[], kind: string): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new Error(
        `${table.path}: missing column '${col}' (required by ${kind}; ` +
          `found: ${table.columns.join(', ')})`,
      )
    }
  }
  if (table.rows.length === 0) {
    throw new Error(`${table.path}: no data rows`)
  }
}

export function numbers(table: Table, column: string): number[] {
  return table.rows.map((r) => {
    const v = Number(r[column])
    if (!Number.isFinite(v)) {
      throw new Error(`${table.path}: non-numeric value '${r[column]}' in column '${column}'`)
    }
    return v
  })
}
